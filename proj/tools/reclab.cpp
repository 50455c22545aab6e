#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reclab/experiment.hpp"

using namespace reclab;

int main(int argc, char** argv)
{
    CLI::App app{"reclab: recommender benchmark harness"};
    app.require_subcommand(1);

    // bench
    auto* bench = app.add_subcommand("bench", "Split, train, and compare algorithms on a dataset");
    std::string config_path;
    std::string out_override;
    std::vector<std::string> algorithms_override;
    size_t repetitions_override = 0;
    int64_t seed_override = -1;
    bench->add_option("--config", config_path, "Experiment config (JSON)")->required();
    bench->add_option("--out", out_override, "Output directory (overrides output_dir)");
    bench->add_option("--algorithms", algorithms_override, "Algorithm list (overrides algorithms)");
    bench->add_option("--repetitions", repetitions_override, "Seed count (overrides repetitions)");
    bench->add_option("--seed", seed_override, "Split seed (overrides split.seed)");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Zipf checks and diversity counts");
    std::string mode;
    std::string dataset_path;
    std::string format_name = "ml-100k";
    std::vector<std::string> context_columns;
    std::string input_path;
    std::string analyze_out = ".";
    bool watched_factorial = false;
    analyze->add_option("--mode", mode, "zipf or diversity")->required()->check(CLI::IsMember({"zipf", "diversity"}));
    analyze->add_option("--dataset", dataset_path, "Ratings file (zipf mode)");
    analyze->add_option("--format", format_name, "ml-100k, ml-1m or comoda (zipf mode)");
    analyze->add_option("--context-columns", context_columns, "CoMoDa context columns (zipf mode)");
    analyze->add_option("--input", input_path, "Diversity input JSON (diversity mode)");
    analyze->add_option("--out", analyze_out, "Output directory");
    analyze->add_flag("--watched-factorial", watched_factorial,
                      "Divide each diversity term by M_i! instead of N! (diversity mode)");

    // generate
    auto* generate = app.add_subcommand("generate", "Write a synthetic Zipf-distributed dataset");
    ZipfSpec zipf;
    std::string generate_out;
    generate->add_option("--users", zipf.n_users, "Number of users")->required();
    generate->add_option("--items", zipf.n_items, "Number of items")->required();
    generate->add_option("--ratings", zipf.n_ratings, "Number of ratings")->required();
    generate->add_option("--exponent", zipf.exponent, "Item popularity exponent");
    generate->add_option("--r-max", zipf.r_max, "Rating scale maximum");
    generate->add_option("--seed", zipf.seed, "Random seed");
    generate->add_option("--out", generate_out, "Output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInputError;
    }

    if (*bench) {
        ExperimentConfig config;
        try {
            config = load_experiment_config(config_path);
            if (!out_override.empty()) {
                config.output_dir = out_override;
            }
            if (!algorithms_override.empty()) {
                config.algorithms.clear();
                for (const auto& name : algorithms_override) {
                    auto algo = parse_algorithm(name);
                    if (!algo) {
                        throw ParseError("unknown algorithm \"" + name + "\"");
                    }
                    config.algorithms.push_back(*algo);
                }
            }
            if (repetitions_override > 0) {
                config.repetitions = repetitions_override;
            }
            if (seed_override >= 0) {
                config.split.seed = static_cast<uint64_t>(seed_override);
            }
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kExitInputError;
        }
        return run_bench(config, std::cerr);
    }

    if (*analyze) {
        if (mode == "zipf") {
            auto format = parse_dataset_format(format_name);
            if (dataset_path.empty() || !format) {
                std::cerr << "error: zipf mode needs --dataset and a known --format\n";
                return kExitInputError;
            }
            ZipfAnalysisRequest request{dataset_path, *format, context_columns, analyze_out};
            if (request.format == DatasetFormat::CoMoDa && request.context_columns.empty()) {
                request.context_columns = default_comoda_context_columns();
            }
            return run_analyze_zipf(request, std::cout);
        }
        if (input_path.empty()) {
            std::cerr << "error: diversity mode needs --input\n";
            return kExitInputError;
        }
        DiversityRequest request{input_path,
                                 watched_factorial ? InvariantDivisor::WatchedFactorial
                                                   : InvariantDivisor::MarketFactorial,
                                 analyze_out};
        return run_analyze_diversity(request, std::cout);
    }

    return run_generate(zipf, generate_out, std::cerr);
}
