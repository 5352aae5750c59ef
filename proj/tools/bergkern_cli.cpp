// bergkern <command> --config <path> [--out <dir>] [--seed <int>]
//
// Exit status: 0 all checks pass, 1 some check failed, 2 bad config, 3 runtime error.

#include <iostream>

#include <CLI11.hpp>

#include <bergkern/cli.hpp>

int main(int argc, char** argv) {
    using namespace bergkern;
    CLI::App app{"bergkern: Bergman kernel and Toeplitz verification runs"};
    std::string command, config_path, out_dir;
    std::optional<std::uint64_t> seed;
    app.add_option("command", command, "suite to run")->required()->check(CLI::IsMember(cli::commands()));
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    app.add_option("--seed", seed, "seed for randomized inputs (overrides seed)");
    CLI11_PARSE(app, argc, argv);

    cli::RunConfig cfg;
    try {
        cfg = cli::load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = out_dir;
        if (seed) cfg.seed = *seed;
        cfg.command = command;
    } catch (const std::exception& e) {
        std::cerr << "bergkern: " << e.what() << "\n";
        return 2;
    }

    cli::Runner runner(cfg);
    try {
        runner.run(command);
    } catch (const config_error& e) {
        std::cerr << "bergkern: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "bergkern: " << e.what() << "\n";
        return 3;
    }
    for (const auto& c : runner.checks())
        std::cout << (c.pass ? "pass " : "FAIL ") << c.name << "  measured=" << c.measured.dump()
                  << "  threshold=" << c.threshold << "\n";
    if (!runner.all_pass()) {
        for (const auto& c : runner.checks())
            if (!c.pass) std::cerr << "bergkern: failed check " << c.name << " (" << c.anchor << ")\n";
        return 1;
    }
    return 0;
}
