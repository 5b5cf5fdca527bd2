#include <sys/wait.h>

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "test_util.hpp"

using namespace gsp;
using namespace gsp::test;
using Catch::Matchers::ContainsSubstring;

namespace {

struct RunResult {
    int code = -1;
    std::string output;
};

std::string cli_path() {
    const char* p = std::getenv("GABORSPLAT_CLI");
    REQUIRE(p != nullptr);
    return p;
}

RunResult run(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " 2>&1";
    std::FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

int count_lines_with(const std::string& text, const std::string& needle) {
    int count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

// One small synthetic scene shared by the training tests.
const TempDir& shared_scene() {
    static TempDir tmp("cli_scene");
    static bool made = false;
    if (!made) {
        RunResult r = run("synth --preset stripes --views 8 --res 32x32 --freq 4 --grid 6 "
                          "--seed 5 --out " +
                          tmp.file("scene"));
        REQUIRE(r.code == 0);
        made = true;
    }
    return tmp;
}

}  // namespace

TEST_CASE("help documents every advertised flag") {
    RunResult top = run("--help");
    CHECK(top.code == 0);
    for (const char* sub : {"train", "render", "eval", "synth", "gradcheck"})
        CHECK_THAT(top.output, ContainsSubstring(sub));

    RunResult tr = run("train --help");
    CHECK(tr.code == 0);
    for (const char* flag :
         {"--data", "--format", "--points", "--out", "--mode", "--n-waves", "--iters", "--seed",
          "--threads", "--eval-every", "--checkpoint-every", "--split-fraction", "--split-random",
          "--densify", "--lambda-dssim", "--w-dist", "--w-normal", "--normal-start-iter",
          "--lr-position", "--lr-position-final", "--lr-rotation", "--lr-scale", "--lr-alpha",
          "--lr-color", "--lr-waves", "--tile-size", "--near-plane", "--alpha-min",
          "--stop-threshold", "--sigma-screen", "--config"})
        CHECK_THAT(tr.output, ContainsSubstring(flag));

    RunResult re = run("render --help");
    for (const char* flag : {"--ckpt", "--camera", "--out", "--show-splats", "--seed", "--threads"})
        CHECK_THAT(re.output, ContainsSubstring(flag));

    RunResult ev = run("eval --help");
    for (const char* flag : {"--ckpt", "--data", "--format", "--split", "--split-fraction"})
        CHECK_THAT(ev.output, ContainsSubstring(flag));

    RunResult sy = run("synth --help");
    for (const char* flag : {"--preset", "--views", "--res", "--freq", "--grid", "--seed", "--out"})
        CHECK_THAT(sy.output, ContainsSubstring(flag));

    RunResult gc = run("gradcheck --help");
    for (const char* flag : {"--seed", "--primitives", "--res", "--n-waves", "--mode", "--step"})
        CHECK_THAT(gc.output, ContainsSubstring(flag));
}

TEST_CASE("unknown arguments and subcommands fail with exit 1") {
    CHECK(run("").code == 1);
    CHECK(run("frobnicate").code == 1);
    CHECK(run("train --no-such-flag").code == 1);
    RunResult r = run("synth --preset marble --views 4 --res 16x16 --seed 1 --out /tmp/x");
    CHECK(r.code == 1);
    CHECK_THAT(r.output, ContainsSubstring("marble"));
}

TEST_CASE("synth emits a loadable dataset deterministically") {
    TempDir tmp("cli_synth");
    std::string args = "synth --preset rings --views 4 --res 24x24 --freq 3 --grid 4 --seed 9 ";
    RunResult a = run(args + "--out " + tmp.file("a"));
    REQUIRE(a.code == 0);
    RunResult b = run(args + "--out " + tmp.file("b"));
    REQUIRE(b.code == 0);

    for (const char* name : {"transforms.json", "points.txt", "view_000.png", "view_003.png"}) {
        INFO(name);
        CHECK(read_file(tmp.file("a/") + name) == read_file(tmp.file("b/") + name));
    }

    Dataset ds = load_transforms(tmp.file("a/transforms.json"));
    REQUIRE(ds.views.size() == 4);
    load_view_images(ds);
    CHECK(ds.views[0].image.width == 24);
    std::vector<SfmPoint> pts = load_points_txt(tmp.file("a/points.txt"));
    CHECK(pts.size() == 16);
}

TEST_CASE("train runs, logs every iteration and reruns identically") {
    const TempDir& tmp = shared_scene();
    std::string args = "train --data " + tmp.file("scene") + " --out " + tmp.file("run1") +
                       " --iters 20 --seed 3 --w-dist 1 --eval-every 10";
    RunResult r = run(args);
    REQUIRE(r.code == 0);
    CHECK_THAT(r.output, ContainsSubstring("final "));
    CHECK_THAT(r.output, ContainsSubstring("psnr="));

    std::string log = read_file(tmp.file("run1/train.log"));
    CHECK(count_lines_with(log, "iter=") == 20);
    CHECK(count_lines_with(log, " psnr=") >= 2);  // eval cadence plus final line
    CHECK_THAT(log, ContainsSubstring("final train_views=7 test_views=1"));

    // Rerun into a different directory: identical artifacts.
    RunResult r2 = run("train --data " + tmp.file("scene") + " --out " + tmp.file("run2") +
                       " --iters 20 --seed 3 --w-dist 1 --eval-every 10");
    REQUIRE(r2.code == 0);
    CHECK(read_file(tmp.file("run1/final.gspl")) == read_file(tmp.file("run2/final.gspl")));
    CHECK(read_file(tmp.file("run1/train.log")) == read_file(tmp.file("run2/train.log")));

    // Thread count must not change the numbers.
    RunResult r3 = run("train --data " + tmp.file("scene") + " --out " + tmp.file("run3") +
                       " --iters 20 --seed 3 --w-dist 1 --eval-every 10 --threads 3");
    REQUIRE(r3.code == 0);
    CHECK(read_file(tmp.file("run1/final.gspl")) == read_file(tmp.file("run3/final.gspl")));
    CHECK(read_file(tmp.file("run1/train.log")) == read_file(tmp.file("run3/train.log")));
}

TEST_CASE("train rejects unsupported requests") {
    const TempDir& tmp = shared_scene();
    RunResult dens = run("train --data " + tmp.file("scene") + " --out " + tmp.file("d") +
                         " --iters 5 --seed 1 --densify");
    CHECK(dens.code == 1);
    CHECK_THAT(dens.output, ContainsSubstring("densification unsupported"));

    RunResult nodata = run("train --data /nonexistent/path --out " + tmp.file("nd") +
                           " --iters 5 --seed 1");
    CHECK(nodata.code == 1);

    RunResult badmode = run("train --data " + tmp.file("scene") + " --out " + tmp.file("bm") +
                            " --iters 5 --seed 1 --mode psychedelic");
    CHECK(badmode.code == 1);
}

TEST_CASE("train reports missing init points") {
    TempDir tmp("cli_nopts");
    RunResult s = run("synth --preset stripes --views 4 --res 16x16 --seed 2 --out " +
                      tmp.file("scene"));
    REQUIRE(s.code == 0);
    std::filesystem::remove(tmp.path / "scene" / "points.txt");
    RunResult r = run("train --data " + tmp.file("scene") + " --out " + tmp.file("out") +
                      " --iters 5 --seed 1");
    CHECK(r.code == 1);
    CHECK_THAT(r.output, ContainsSubstring("no init points"));
}

TEST_CASE("checkpoints at a cadence plus the final state") {
    const TempDir& tmp = shared_scene();
    RunResult r = run("train --data " + tmp.file("scene") + " --out " + tmp.file("ck") +
                      " --iters 10 --seed 4 --w-dist 1 --checkpoint-every 4");
    REQUIRE(r.code == 0);
    CHECK(std::filesystem::exists(tmp.path / "ck" / "ckpt_000004.gspl"));
    CHECK(std::filesystem::exists(tmp.path / "ck" / "ckpt_000008.gspl"));
    CHECK(std::filesystem::exists(tmp.path / "ck" / "final.gspl"));
    Scene s = load_checkpoint(tmp.file("ck/final.gspl"));
    CHECK(s.count() == 36);  // 6x6 init grid
}

TEST_CASE("render produces deterministic images from a checkpoint") {
    const TempDir& tmp = shared_scene();
    REQUIRE(run("train --data " + tmp.file("scene") + " --out " + tmp.file("r_run") +
                " --iters 10 --seed 6 --w-dist 1")
                .code == 0);
    std::string ckpt = tmp.file("r_run/final.gspl");

    RunResult a = run("render --ckpt " + ckpt + " --camera " + tmp.file("scene") +
                      "@2 --out " + tmp.file("v2.png"));
    REQUIRE(a.code == 0);
    REQUIRE(std::filesystem::exists(tmp.path / "v2.png"));
    RunResult b = run("render --ckpt " + ckpt + " --camera " + tmp.file("scene") +
                      "@2 --out " + tmp.file("v2_again.png"));
    REQUIRE(b.code == 0);
    CHECK(read_file(tmp.file("v2.png")) == read_file(tmp.file("v2_again.png")));

    Image im = load_png(tmp.file("v2.png"));
    CHECK(im.width == 32);
    CHECK(im.height == 32);

    // Splat visualization side image.
    RunResult sp = run("render --ckpt " + ckpt + " --camera " + tmp.file("scene") +
                       "@2 --show-splats --out " + tmp.file("v2_vis.png"));
    REQUIRE(sp.code == 0);
    CHECK(std::filesystem::exists(tmp.path / "v2_vis.splats.png"));

    RunResult missing = run("render --ckpt " + tmp.file("nope.gspl") + " --camera " +
                            tmp.file("scene") + "@2 --out " + tmp.file("x.png"));
    CHECK(missing.code == 1);

    RunResult badidx = run("render --ckpt " + ckpt + " --camera " + tmp.file("scene") +
                           "@99 --out " + tmp.file("x.png"));
    CHECK(badidx.code == 1);
    CHECK_THAT(badidx.output, ContainsSubstring("out of range"));
}

TEST_CASE("eval prints per-view metrics and honors the split") {
    const TempDir& tmp = shared_scene();
    REQUIRE(run("train --data " + tmp.file("scene") + " --out " + tmp.file("e_run") +
                " --iters 10 --seed 8 --w-dist 1")
                .code == 0);
    std::string ckpt = tmp.file("e_run/final.gspl");

    RunResult all = run("eval --ckpt " + ckpt + " --data " + tmp.file("scene") +
                        " --split all");
    REQUIRE(all.code == 0);
    CHECK(count_lines_with(all.output, "view_") == 8);
    CHECK_THAT(all.output, ContainsSubstring("mean"));
    CHECK_THAT(all.output, ContainsSubstring("LPIPS: not supported"));

    RunResult test_split = run("eval --ckpt " + ckpt + " --data " + tmp.file("scene"));
    REQUIRE(test_split.code == 0);
    CHECK(count_lines_with(test_split.output, "view_") == 1);

    // A 4-view dataset has no held-out views at the default fraction.
    TempDir tiny("cli_tiny");
    REQUIRE(run("synth --preset stripes --views 4 --res 16x16 --seed 2 --out " +
                tiny.file("scene"))
                .code == 0);
    RunResult empty = run("eval --ckpt " + ckpt + " --data " + tiny.file("scene") +
                          " --split test");
    CHECK(empty.code == 1);
    CHECK_THAT(empty.output, ContainsSubstring("empty"));
}

TEST_CASE("eval scores a checkpoint's own renders as perfect") {
    const TempDir& tmp = shared_scene();
    REQUIRE(run("train --data " + tmp.file("scene") + " --out " + tmp.file("p_run") +
                " --iters 10 --seed 9 --w-dist 1")
                .code == 0);
    std::string ckpt = tmp.file("p_run/final.gspl");

    // Copy the dataset, replace every image with the checkpoint's render.
    TempDir self("cli_self");
    std::filesystem::create_directories(self.path / "scene");
    std::filesystem::copy_file(tmp.path / "scene" / "transforms.json",
                               self.path / "scene" / "transforms.json");
    std::filesystem::copy_file(tmp.path / "scene" / "points.txt",
                               self.path / "scene" / "points.txt");
    for (int i = 0; i < 8; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "view_%03d.png", i);
        RunResult r = run("render --ckpt " + ckpt + " --camera " + tmp.file("scene") + "@" +
                          std::to_string(i) + " --out " + self.file("scene/") + name);
        REQUIRE(r.code == 0);
    }
    RunResult ev = run("eval --ckpt " + ckpt + " --data " + self.file("scene") +
                       " --split all");
    REQUIRE(ev.code == 0);
    CHECK(count_lines_with(ev.output, "inf") >= 8);
    CHECK_THAT(ev.output, ContainsSubstring("mean\tinf\t1\n"));  // SSIM exactly one
}

TEST_CASE("eval rejects mismatched image sizes") {
    const TempDir& tmp = shared_scene();
    REQUIRE(run("train --data " + tmp.file("scene") + " --out " + tmp.file("m_run") +
                " --iters 5 --seed 1 --w-dist 1")
                .code == 0);
    TempDir broken("cli_broken");
    std::filesystem::create_directories(broken.path / "scene");
    for (const auto& entry : std::filesystem::directory_iterator(tmp.path / "scene"))
        std::filesystem::copy_file(entry.path(), broken.path / "scene" / entry.path().filename());
    save_png(broken.file("scene/view_001.png"), Image(8, 8, 3));
    RunResult r = run("eval --ckpt " + tmp.file("m_run/final.gspl") + " --data " +
                      broken.file("scene") + " --split all");
    CHECK(r.code == 1);
    CHECK_THAT(r.output, ContainsSubstring("does not match"));
}

TEST_CASE("gradcheck passes clean and flags corrupted gradients") {
    RunResult ok = run("gradcheck --seed 1 --primitives 4 --res 16x16 --n-waves 2");
    REQUIRE(ok.code == 0);
    CHECK_THAT(ok.output, ContainsSubstring("gradcheck: PASS"));
    for (const char* group : {"position", "rotation", "scale", "alpha", "color", "wave"})
        CHECK_THAT(ok.output, ContainsSubstring(std::string("group=") + group));

    RunResult bad = run("gradcheck --seed 1 --primitives 4 --res 16x16 --n-waves 2 "
                        "--corrupt-group scale");
    CHECK(bad.code == 2);
    CHECK_THAT(bad.output, ContainsSubstring("gradcheck: FAIL"));
    CHECK_THAT(bad.output, ContainsSubstring("scale"));

    CHECK(run("gradcheck --seed 1 --primitives 0 --res 16x16").code == 1);
    CHECK(run("gradcheck --seed 1 --primitives 4 --res 8x8").code == 1);
}
