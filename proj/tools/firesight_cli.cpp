// Command-line front end. Talks to the pipeline only through the C API.
#include <csignal>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "firesight/firesight.h"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

int run(const std::string& config_path) {
    fs_pipeline* p = nullptr;
    fs_status st = fs_pipeline_create_from_file(config_path.c_str(), &p);
    if (st != FS_OK) {
        std::fprintf(stderr, "firesight: %s\n", fs_last_error());
        return (st == FS_ERR_BIND || st == FS_ERR_STORAGE || st == FS_ERR_INTERNAL) ? 2 : 1;
    }
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    st = fs_pipeline_start(p);
    if (st != FS_OK) {
        std::fprintf(stderr, "firesight: %s\n", fs_last_error());
        fs_pipeline_destroy(p);
        return 2;
    }
    char addr[128];
    if (fs_pipeline_bound_address(p, addr, sizeof addr) == FS_OK) {
        std::printf("listening on http://%s/\n", addr);
        std::fflush(stdout);
    }

    int finished = 0, exit_when_done = 1;
    while (!g_stop) {
        fs_pipeline_wait(p, 100, &finished, &exit_when_done);
        if (finished && exit_when_done) break;
    }
    fs_pipeline_request_stop(p);
    fs_pipeline_destroy(p);
    std::printf("%s\n", finished ? "sources ended, exiting" : "stopped");
    return 0;
}

int replay_check(const std::string& dir) {
    std::uint64_t count = 0;
    std::uint32_t w = 0, h = 0;
    char format[16];
    if (fs_replay_check(dir.c_str(), &count, &w, &h, format, sizeof format) != FS_OK) {
        std::fprintf(stderr, "firesight: %s\n", fs_last_error());
        return 1;
    }
    std::printf("%llu valid %s frames, %ux%u, in %s\n", static_cast<unsigned long long>(count), format, w, h,
                dir.c_str());
    return 0;
}

int synth(const std::string& script, const std::string& out, std::uint32_t frames, const std::string& format,
          std::uint32_t width, std::uint32_t height) {
    if (fs_synth_render(script.c_str(), out.c_str(), frames, format.c_str(), width, height) != FS_OK) {
        std::fprintf(stderr, "firesight: %s\n", fs_last_error());
        return 1;
    }
    std::printf("wrote %u %s frames to %s\n", frames, format.c_str(), out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"firesight: edge perception pipeline for firefighting camera feeds"};
    app.set_version_flag("--version", std::string("firesight ") + fs_version());
    app.require_subcommand(1);

    std::string config_path;
    auto* run_cmd = app.add_subcommand("run", "Start the pipeline and stream server");
    run_cmd->add_option("--config", config_path, "Pipeline config JSON")->required();

    std::string replay_dir;
    auto* check_cmd = app.add_subcommand("replay-check", "Validate a replay directory of FGF1 frames");
    check_cmd->add_option("--dir", replay_dir, "Directory of .fgf files")->required();

    std::string script_path, out_dir, format = "GRAY16";
    std::uint32_t frames = 0, width = 0, height = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Render a scene script to FGF1 files");
    synth_cmd->add_option("--script", script_path, "Scene script JSON")->required();
    synth_cmd->add_option("--out", out_dir, "Output directory")->required();
    synth_cmd->add_option("--frames", frames, "Number of frames")->required()->check(CLI::PositiveNumber);
    synth_cmd->add_option("--format", format, "GRAY16, RGB8 or DEPTH16")
        ->check(CLI::IsMember({"GRAY16", "RGB8", "DEPTH16"}));
    synth_cmd->add_option("--width", width, "Frame width (default by format)");
    synth_cmd->add_option("--height", height, "Frame height (default by format)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::fprintf(stderr, "firesight: %s (try --help)\n", e.what());
        return 1;
    }

    if (*run_cmd) return run(config_path);
    if (*check_cmd) return replay_check(replay_dir);
    return synth(script_path, out_dir, frames, format, width, height);
}
