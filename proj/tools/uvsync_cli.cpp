/*
 * Copyright (C) 2026 The uvsync Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end: generate, render, validate, bench.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "uvsync/config.hpp"
#include "uvsync/error.hpp"
#include "uvsync/grid_io.hpp"
#include "uvsync/pipeline.hpp"
#include "uvsync/validate.hpp"

namespace fs = std::filesystem;
using namespace uvsync;

namespace {

struct MeshSource {
    std::string dir;
    std::string pattern = "frame_%04d.obj";
    std::string builtin;  // sphere | quad | two-planes
};

void add_mesh_options(CLI::App* cmd, MeshSource& src) {
    cmd->add_option("--mesh-dir", src.dir, "Directory of OBJ keyframes");
    cmd->add_option("--pattern", src.pattern, "Keyframe file pattern")->capture_default_str();
    cmd->add_option("--mesh", src.builtin, "Built-in mesh instead of --mesh-dir")
        ->check(CLI::IsMember({"sphere", "quad", "two-planes"}));
}

MeshSequence load_meshes(const MeshSource& src) {
    if (!src.dir.empty()) {
        return load_mesh_sequence(src.dir, src.pattern);
    }
    if (src.builtin == "quad") {
        return make_quad(1.0, 1.0);
    }
    if (src.builtin == "two-planes") {
        return make_two_planes(1.0, 0.4, 0.5);
    }
    if (src.builtin == "sphere") {
        return make_uv_sphere(1.0, 64, 32);
    }
    fail(ErrorCode::InvalidArgument, "either --mesh-dir or --mesh is required");
}

/// orbit:AZ:EL:RADIUS[:FOV_DEG]
Camera parse_camera(const std::string& source, int size) {
    std::vector<double> parts;
    std::stringstream in(source);
    std::string item;
    std::getline(in, item, ':');
    require(item == "orbit", ErrorCode::InvalidArgument, "camera source must look like orbit:AZ:EL:RADIUS[:FOV]");
    while (std::getline(in, item, ':')) {
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "bad number '" + item + "' in camera source");
        }
    }
    require(parts.size() == 3 || parts.size() == 4, ErrorCode::InvalidArgument,
            "camera source must look like orbit:AZ:EL:RADIUS[:FOV]");
    RigOptions options;
    options.resolution = {size, size};
    if (parts.size() == 4) {
        options.vertical_fov = radians(parts[3]);
    }
    return orbit_camera(parts[2], parts[0], parts[1], options);
}

int run_generate(const MeshSource& src, const std::string& config_path, const std::optional<std::string>& prompt,
                 const std::optional<std::string>& denoiser, const std::optional<std::string>& mode,
                 const std::optional<uint64_t>& seed, const std::optional<int>& steps, const std::string& out,
                 bool verbose) {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
    if (prompt) cfg.prompt = *prompt;
    if (denoiser) cfg.denoiser = *denoiser;
    if (mode) cfg.mode = parse_aggregation_mode(*mode);
    if (seed) cfg.seed = *seed;
    if (steps) cfg.steps = *steps;
    cfg.validate();

    const MeshSequence meshes = load_meshes(src);
    const CameraRig rig = cfg.make_rig();
    const auto backend = make_denoiser(cfg, meshes, rig);
    std::cerr << "uvsync: " << meshes.frame_count() << " keyframes, " << rig.size() << " views, T = " << cfg.steps
              << ", denoiser " << backend->info().name << '\n';

    const Pipeline pipeline(meshes, rig, cfg);
    std::vector<double> timings;
    const DiffusionResult result = pipeline.run(*backend, [&](const StepSnapshot& s) {
        timings.push_back(s.seconds);
        if (verbose) {
            std::cerr << "  step " << s.t << " " << s.seconds << " s\n";
        }
    });
    FinalizeOptions fin;
    fin.resolution = cfg.effective_final_resolution();
    fin.aggregation = cfg.aggregation();
    fin.depth_tolerance = cfg.depth_tolerance;
    fin.supersample = cfg.supersample;
    fin.dilation = cfg.dilation;
    TextureSequence seq = finalize_textures(meshes, rig, result, fin);
    seq = interpolate_keyframes(std::move(seq), meshes.frame_count() >= 2 ? cfg.keyframe_interval : 1);
    seq.validate();

    const fs::path out_dir(out);
    save_texture_sequence(out_dir / "textures", seq);
    fs::create_directories(out_dir / "backgrounds");
    for (std::size_t v = 0; v < result.backgrounds.size(); ++v) {
        for (std::size_t k = 0; k < result.backgrounds[v].size(); ++k) {
            char name[64];
            std::snprintf(name, sizeof name, "view_%02zu_frame_%04zu", v, k);
            save_grid(out_dir / "backgrounds" / (std::string(name) + ".grid"), result.backgrounds[v][k]);
            write_png(out_dir / "backgrounds" / (std::string(name) + ".png"), result.backgrounds[v][k], -2.0f, 2.0f);
        }
    }
    double total = 0.0;
    for (double t : timings) total += t;
    std::ostringstream extra;
    extra << "{\"denoiser\":\"" << backend->info().name << "\",\"views\":" << rig.size()
          << ",\"sampling_seconds\":" << total << "}";
    write_manifest(out_dir / "manifest.json", cfg, seq, extra.str());
    std::cerr << "uvsync: wrote " << seq.frames.size() << " textures to " << (out_dir / "textures") << '\n';
    return 0;
}

int run_render(const MeshSource& src, const std::string& textures, const std::string& camera_spec, int size,
               int rig_views, const std::string& out) {
    const MeshSequence meshes = load_meshes(src);
    const TextureSequence seq = load_texture_sequence(textures);
    RenderSequenceOptions options;
    if (rig_views > 0) {
        const Camera probe = parse_camera(camera_spec, size);
        const double radius = length(probe.position - probe.look_at);
        RigOptions rig_opts;
        rig_opts.resolution = {size, size};
        rig_opts.vertical_fov = probe.vertical_fov;
        options.consistency_rig = default_rig(radius, rig_views, false, rig_opts);
    }
    const auto report = render_sequence(meshes, seq, parse_camera(camera_spec, size), out, options);
    for (const auto& r : report) {
        std::printf("frame %d: %zu texels, mean std %.5f, max std %.5f\n", r.frame, r.texels, r.mean_std, r.max_std);
    }
    std::printf("rendered %zu frames to %s\n", seq.frames.size(), out.c_str());
    return 0;
}

int run_validate(uint64_t seed) {
    const auto results = run_self_checks(seed);
    bool ok = true;
    for (const auto& r : results) {
        std::printf("[%s] %-60s %s (%.2f s)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str(),
                    r.seconds);
        ok &= r.passed;
    }
    return ok ? 0 : 1;
}

int run_bench(const MeshSource& src, const std::string& config_path, int steps, int threads) {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : PipelineConfig::load(config_path);
    cfg.steps = steps;
    cfg.threads = threads;
    cfg.validate();
    MeshSource source = src;
    if (source.dir.empty() && source.builtin.empty()) {
        source.builtin = "sphere";
    }
    const MeshSequence meshes = load_meshes(source);
    const CameraRig rig = cfg.make_rig();
    const auto backend = make_denoiser(cfg, meshes, rig);
    const auto setup_start = std::chrono::steady_clock::now();
    const Pipeline pipeline(meshes, rig, cfg);
    const double setup = std::chrono::duration<double>(std::chrono::steady_clock::now() - setup_start).count();
    std::vector<double> timings;
    pipeline.run(*backend, [&](const StepSnapshot& s) { timings.push_back(s.seconds); });
    double total = 0.0, worst = 0.0;
    for (double t : timings) {
        total += t;
        worst = std::max(worst, t);
    }
    std::printf("setup (buffers + plans): %.3f s\n", setup);
    std::printf("steps: %zu, mean %.4f s, max %.4f s, total %.3f s\n", timings.size(),
                timings.empty() ? 0.0 : total / timings.size(), worst, total);
    std::printf("keyframes %d, views %d, latent %d^2, uv %d^2, threads %d\n", meshes.frame_count(), rig.size(),
                cfg.latent_resolution, cfg.uv_resolution, threads);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"UV-synchronised diffusion texturing for animated meshes"};
    app.set_version_flag("--version", std::string(version_string()));
    app.require_subcommand(1);

    MeshSource gen_src;
    std::string gen_config, gen_out = "out";
    std::optional<std::string> prompt, denoiser, mode;
    std::optional<uint64_t> seed;
    std::optional<int> steps;
    bool verbose = false;
    auto* gen = app.add_subcommand("generate", "Run the sampler and export textures");
    add_mesh_options(gen, gen_src);
    gen->add_option("--prompt", prompt, "Text prompt passed to the denoiser");
    gen->add_option("--config", gen_config, "key = value config file");
    gen->add_option("--denoiser", denoiser, "oracle | noisy-oracle | toy | remote:HOST:PORT");
    gen->add_option("--mode", mode, "proposed | agg-x0-eps | agg-zprev");
    gen->add_option("--seed", seed, "Random seed");
    gen->add_option("--steps", steps, "Sampling steps");
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
    gen->add_flag("-v,--verbose", verbose, "Per-step timing");

    MeshSource ren_src;
    std::string textures, camera = "orbit:0:0:2.5", ren_out = "renders";
    int size = 256, rig_views = 0;
    auto* ren = app.add_subcommand("render", "Render a texture sequence from a camera");
    add_mesh_options(ren, ren_src);
    ren->add_option("--textures", textures, "Texture directory written by generate")->required();
    ren->add_option("--camera", camera, "orbit:AZ:EL:RADIUS[:FOV]")->capture_default_str();
    ren->add_option("--size", size, "Image size in pixels")->capture_default_str()->check(CLI::PositiveNumber);
    ren->add_option("--consistency-views", rig_views, "Views for the cross-view consistency report (0: off)");
    ren->add_option("--out", ren_out, "Output directory")->capture_default_str();

    uint64_t validate_seed = 1;
    auto* val = app.add_subcommand("validate", "Run the invariant self-checks");
    val->add_option("--seed", validate_seed, "Seed for the randomised checks")->capture_default_str();

    MeshSource bench_src;
    std::string bench_config;
    int bench_steps = 5, bench_threads = 0;
    auto* bench = app.add_subcommand("bench", "Per-step timing report");
    add_mesh_options(bench, bench_src);
    bench->add_option("--config", bench_config, "key = value config file");
    bench->add_option("--steps", bench_steps, "Sampling steps")->capture_default_str();
    bench->add_option("--threads", bench_threads, "Worker threads (0: all cores)")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) {
            return run_generate(gen_src, gen_config, prompt, denoiser, mode, seed, steps, gen_out, verbose);
        }
        if (*ren) {
            return run_render(ren_src, textures, camera, size, rig_views, ren_out);
        }
        if (*val) {
            return run_validate(validate_seed);
        }
        if (*bench) {
            return run_bench(bench_src, bench_config, bench_steps, bench_threads);
        }
    } catch (const Error& e) {
        std::cerr << "uvsync: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "uvsync: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
