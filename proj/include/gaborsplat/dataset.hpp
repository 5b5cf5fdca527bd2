#ifndef GABORSPLAT_DATASET_HPP
#define GABORSPLAT_DATASET_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "gaborsplat/geometry.hpp"
#include "gaborsplat/image.hpp"
#include "gaborsplat/init.hpp"

namespace gsp {

struct View {
    int camera = 0;
    std::string name;
    std::string path;
    Image image;  // empty until loaded
};

struct Dataset {
    std::vector<Camera> cameras;
    std::vector<View> views;
    std::vector<SfmPoint> points;

    // Checks the cross-references; image dims are checked only for views
    // whose pixels have been loaded.
    void validate() const {
        for (const View& v : views) {
            if (v.camera < 0 || v.camera >= int(cameras.size()))
                throw std::invalid_argument("dataset: view '" + v.name +
                                            "' references an invalid camera");
            const Camera& cam = cameras[v.camera];
            if (v.image.size() > 0 &&
                (v.image.width != cam.width || v.image.height != cam.height))
                throw std::invalid_argument("dataset: image size of view '" + v.name +
                                            "' does not match its camera");
        }
    }
};

}  // namespace gsp

#endif
