#ifndef GABORSPLAT_GABORSPLAT_HPP
#define GABORSPLAT_GABORSPLAT_HPP

#include "gaborsplat/adam.hpp"
#include "gaborsplat/checkpoint_io.hpp"
#include "gaborsplat/colmap_io.hpp"
#include "gaborsplat/core.hpp"
#include "gaborsplat/dataset.hpp"
#include "gaborsplat/gabor.hpp"
#include "gaborsplat/geometry.hpp"
#include "gaborsplat/gradcheck.hpp"
#include "gaborsplat/image.hpp"
#include "gaborsplat/init.hpp"
#include "gaborsplat/losses.hpp"
#include "gaborsplat/parallel.hpp"
#include "gaborsplat/png_io.hpp"
#include "gaborsplat/rasterizer.hpp"
#include "gaborsplat/rng.hpp"
#include "gaborsplat/scene.hpp"
#include "gaborsplat/synth.hpp"
#include "gaborsplat/train.hpp"
#include "gaborsplat/transforms_io.hpp"
#include "gaborsplat/vec.hpp"

#endif
