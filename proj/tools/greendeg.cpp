#include <iostream>

#include <CLI11.hpp>

#include <greendeg/app.hpp>

int main(int argc, char** argv) {
    CLI::App cli{"Green-function degeneration of meromorphic polynomial families"};
    cli.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    greendeg::app::Overrides overrides;
    double tol = 0;
    int iterations = 0;
    std::uint64_t seed = 0;

    for (const char* name : {"classify", "report", "lyapunov"}) {
        auto* sub = cli.add_subcommand(name);
        sub->add_option("config", config_path, "family configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--tol", tol, "numerical tolerance (overrides config)");
        sub->add_option("--budget-iters", iterations, "iteration budget (overrides config)");
        sub->add_option("--seed", seed, "root-finder seed (overrides config)");
    }

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : greendeg::app::kError;
    }
    const std::string command = cli.get_subcommands().front()->get_name();
    const auto* sub = cli.get_subcommands().front();
    if (sub->count("--tol")) overrides.tol = tol;
    if (sub->count("--budget-iters")) overrides.iterations = iterations;
    if (sub->count("--seed")) overrides.seed = seed;

    try {
        auto cfg = greendeg::load_config(config_path);
        greendeg::app::apply(cfg, overrides);
        const auto result = greendeg::app::run(command, cfg);
        greendeg::app::write_outputs(out_dir, result.files);
        std::cout << result.summary;
        return result.exit_code;
    } catch (const greendeg::ParseError& e) {
        std::cerr << config_path << ":" << e.what() << "\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
    }
    return greendeg::app::kError;
}
