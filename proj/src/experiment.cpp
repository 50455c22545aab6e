#include "reclab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <thread>

#ifndef RECLAB_VERSION
#define RECLAB_VERSION "0.0.0"
#endif

namespace reclab {

namespace {

std::string json_text(const Json& j)
{
    return j.dump(2) + "\n";
}

template<typename F> int guarded(std::ostream& log, F&& body)
{
    try {
        return body();
    } catch (const DivergenceError& e) {
        log << "error: " << e.what() << '\n';
        return kExitDivergence;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitInputError;
    }
}

Json cf_to_json(const CfConfig& cf)
{
    return Json{{"neighborhood_size", cf.neighborhood_size},
                {"similarity", cf.similarity == SimilarityKind::Cosine ? "cosine" : "adjusted_cosine"}};
}

CfConfig cf_from_json(const Json& j)
{
    CfConfig cf;
    if (j.contains("neighborhood_size")) {
        cf.neighborhood_size = j.at("neighborhood_size").get<size_t>();
    }
    if (j.contains("similarity")) {
        auto kind = j.at("similarity").get<std::string>();
        if (kind == "cosine") {
            cf.similarity = SimilarityKind::Cosine;
        } else if (kind == "adjusted_cosine") {
            cf.similarity = SimilarityKind::AdjustedCosine;
        } else {
            throw ParseError("unknown similarity \"" + kind + "\" (expected cosine or adjusted_cosine)");
        }
    }
    if (cf.neighborhood_size < 1) {
        throw ParseError("cf.neighborhood_size must be at least 1");
    }
    return cf;
}

bool trains_own_model(Algorithm algo)
{
    switch (algo) {
    case Algorithm::ZeroMatHybrid:
    case Algorithm::DotMatHybrid:
    case Algorithm::PoissonMatHybrid:
    case Algorithm::Random:
        return false;
    default:
        return true;
    }
}

void ensure_directory(const std::filesystem::path& dir)
{
    if (!dir.empty()) {
        std::filesystem::create_directories(dir);
    }
}

} // namespace

std::optional<DatasetFormat> parse_dataset_format(std::string_view name)
{
    if (name == "ml-100k") {
        return DatasetFormat::MovieLens100K;
    }
    if (name == "ml-1m") {
        return DatasetFormat::MovieLens1M;
    }
    if (name == "comoda") {
        return DatasetFormat::CoMoDa;
    }
    return std::nullopt;
}

std::string_view dataset_format_name(DatasetFormat format)
{
    switch (format) {
    case DatasetFormat::MovieLens100K:
        return "ml-100k";
    case DatasetFormat::MovieLens1M:
        return "ml-1m";
    case DatasetFormat::CoMoDa:
        return "comoda";
    }
    return "unknown";
}

ExperimentConfig experiment_config_from_json(const Json& j, const std::filesystem::path& base_dir)
{
    ExperimentConfig config;
    try {
        const auto& dataset = j.at("dataset");
        config.dataset.path = dataset.at("path").get<std::string>();
        config.dataset.resolved = base_dir / config.dataset.path;
        auto format_name = dataset.value("format", std::string("ml-100k"));
        auto format = parse_dataset_format(format_name);
        if (!format) {
            throw ParseError("unknown dataset format \"" + format_name + "\" (expected ml-100k, ml-1m or comoda)");
        }
        config.dataset.format = *format;
        if (dataset.contains("context_columns")) {
            config.dataset.context_columns = dataset.at("context_columns").get<std::vector<std::string>>();
        } else if (*format == DatasetFormat::CoMoDa) {
            config.dataset.context_columns = default_comoda_context_columns();
        }

        if (j.contains("split")) {
            const auto& split = j.at("split");
            config.split.test_fraction = split.value("test_fraction", config.split.test_fraction);
            config.split.seed = split.value("seed", config.split.seed);
        }
        if (!(config.split.test_fraction > 0.0 && config.split.test_fraction < 1.0)) {
            throw ParseError("split.test_fraction must lie strictly between 0 and 1");
        }

        for (const auto& name : j.at("algorithms").get<std::vector<std::string>>()) {
            auto algo = parse_algorithm(name);
            if (!algo) {
                throw ParseError("unknown algorithm \"" + name + "\"");
            }
            config.algorithms.push_back(*algo);
        }

        if (j.contains("train")) {
            const auto& train = j.at("train");
            if (train.contains("default")) {
                config.settings.defaults = train_config_from_json(train.at("default"));
            }
            for (const auto& [key, value] : train.items()) {
                if (key == "default") {
                    continue;
                }
                auto algo = parse_algorithm(key);
                if (!algo || !trains_own_model(*algo)) {
                    throw ParseError("train: \"" + key + "\" does not name a trainable algorithm");
                }
                config.settings.train[*algo] = train_config_from_json(value, config.settings.defaults);
            }
        }
        if (j.contains("cf")) {
            config.settings.cf = cf_from_json(j.at("cf"));
        }
        if (j.contains("hybrid")) {
            config.settings.fill_fraction = j.at("hybrid").value("fill_fraction", config.settings.fill_fraction);
        }
        if (!(config.settings.fill_fraction >= 0.0 && config.settings.fill_fraction <= 1.0)) {
            throw ParseError("hybrid.fill_fraction must lie in [0, 1]");
        }
        if (j.contains("powermat")) {
            const auto& pm = j.at("powermat");
            config.settings.powermat.sigma_u = pm.value("sigma_u", config.settings.powermat.sigma_u);
            config.settings.powermat.sigma_v = pm.value("sigma_v", config.settings.powermat.sigma_v);
        }
        config.repetitions = j.value("repetitions", size_t{1});
        if (config.repetitions < 1) {
            throw ParseError("repetitions must be at least 1");
        }
        if (j.contains("output_dir")) {
            config.output_dir = base_dir / j.at("output_dir").get<std::string>();
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    return config;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return experiment_config_from_json(j, path.parent_path());
}

Json to_json(const ExperimentConfig& config)
{
    Json algorithms = Json::array();
    for (auto algo : config.algorithms) {
        algorithms.push_back(algorithm_name(algo));
    }
    Json train = Json::object();
    train["default"] = to_json(config.settings.defaults);
    for (const auto& [algo, cfg] : config.settings.train) {
        train[std::string(algorithm_name(algo))] = to_json(cfg);
    }
    return Json{
        {"dataset",
         {{"path", config.dataset.path},
          {"format", dataset_format_name(config.dataset.format)},
          {"context_columns", config.dataset.context_columns}}},
        {"split", {{"test_fraction", config.split.test_fraction}, {"seed", config.split.seed}}},
        {"algorithms", algorithms},
        {"train", train},
        {"cf", cf_to_json(config.settings.cf)},
        {"hybrid", {{"fill_fraction", config.settings.fill_fraction}}},
        {"powermat", {{"sigma_u", config.settings.powermat.sigma_u}, {"sigma_v", config.settings.powermat.sigma_v}}},
        {"repetitions", config.repetitions},
    };
}

LoadedDataset load_dataset(const DatasetSpec& spec)
{
    const auto& path = spec.resolved.empty() ? std::filesystem::path(spec.path) : spec.resolved;
    if (!std::filesystem::exists(path)) {
        throw ParseError("dataset not found: " + path.string());
    }
    switch (spec.format) {
    case DatasetFormat::MovieLens100K:
    case DatasetFormat::MovieLens1M: {
        auto format = spec.format == DatasetFormat::MovieLens100K ? MovieLensFormat::Tab100K : MovieLensFormat::Colons1M;
        auto parsed = load_movielens(path, format);
        return LoadedDataset{std::move(parsed.dataset), {}, parsed.duplicates_replaced};
    }
    case DatasetFormat::CoMoDa: {
        auto parsed = load_comoda(path, spec.context_columns);
        return LoadedDataset{std::move(parsed.ratings.dataset), std::move(parsed.samples),
                             parsed.ratings.duplicates_replaced};
    }
    }
    throw ParseError("unsupported dataset format");
}

size_t thread_budget()
{
    if (const char* env = std::getenv("RECLAB_THREADS")) {
        char* end = nullptr;
        long value = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && value >= 1) {
            return static_cast<size_t>(value);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

AlgorithmSettings settings_for_repetition(const AlgorithmSettings& settings, size_t rep)
{
    AlgorithmSettings shifted = settings;
    shifted.defaults.seed += rep;
    for (auto& [algo, cfg] : shifted.train) {
        cfg.seed += rep;
    }
    return shifted;
}

int run_bench(const ExperimentConfig& config, std::ostream& log)
{
    return guarded(log, [&] {
        for (auto algo : config.algorithms) {
            if (needs_context(algo) && config.dataset.format != DatasetFormat::CoMoDa) {
                throw ValidationError(std::string(algorithm_name(algo)) + ": context required, but " +
                                      std::string(dataset_format_name(config.dataset.format)) +
                                      " datasets carry no context columns");
            }
        }
        auto loaded = load_dataset(config.dataset);
        if (loaded.duplicates_replaced > 0) {
            log << "warning: " << loaded.duplicates_replaced << " duplicate (user, item) lines; kept the last\n";
        }
        ensure_directory(config.output_dir);
        const size_t threads = thread_budget();

        std::vector<EvalReport> reports;
        Json seeds = Json::array();
        for (size_t rep = 0; rep < config.repetitions; rep++) {
            SplitSpec spec{config.split.test_fraction, config.split.seed + rep};
            auto parts = split(loaded.ratings, spec);
            auto train_contexts = contexts_for(parts.train, loaded.contexts);
            CompareOptions options{spec.seed, spec.test_fraction, threads, train_contexts};
            auto report = compare(parts.train, parts.test, config.algorithms,
                                  settings_for_repetition(config.settings, rep), options);

            auto dir = config.output_dir / ("seed-" + std::to_string(spec.seed));
            ensure_directory(dir);
            write_file_atomic(dir / "report.json", json_text(to_json(report)));
            write_file_atomic(dir / "report.csv", to_csv(report));
            seeds.push_back(spec.seed);
            for (const auto& e : report.entries) {
                log << "seed " << spec.seed << "  " << e.algorithm << "  mae " << e.mae << '\n';
            }
            reports.push_back(std::move(report));
        }

        Json rows = Json::array();
        std::ostringstream csv;
        csv << "algo,mean_mae,std_mae,n_seeds\n";
        for (size_t r = 0; r < reports.front().entries.size(); r++) {
            double mean = 0.0;
            for (const auto& report : reports) {
                mean += report.entries[r].mae;
            }
            mean /= static_cast<double>(reports.size());
            double var = 0.0;
            for (const auto& report : reports) {
                double d = report.entries[r].mae - mean;
                var += d * d;
            }
            double sd = reports.size() > 1 ? std::sqrt(var / static_cast<double>(reports.size() - 1)) : 0.0;
            const auto& name = reports.front().entries[r].algorithm;
            rows.push_back(Json{{"algo", name}, {"mean_mae", mean}, {"std_mae", sd}, {"n_seeds", reports.size()}});
            csv << name << ',' << Json(mean).dump() << ',' << Json(sd).dump() << ',' << reports.size() << '\n';
        }
        write_file_atomic(config.output_dir / "aggregate.json", json_text(Json{{"rows", rows}}));
        write_file_atomic(config.output_dir / "aggregate.csv", csv.str());

        Json manifest{
            {"tool", "reclab"},
            {"version", RECLAB_VERSION},
            {"config", to_json(config)},
            {"seeds", seeds},
            {"dataset",
             {{"n_users", loaded.ratings.n_users()},
              {"n_items", loaded.ratings.n_items()},
              {"n_ratings", loaded.ratings.size()},
              {"r_max", loaded.ratings.r_max()},
              {"duplicates_replaced", loaded.duplicates_replaced}}},
        };
        write_file_atomic(config.output_dir / "manifest.json", json_text(manifest));
        return static_cast<int>(kExitOk);
    });
}

int run_analyze_zipf(const ZipfAnalysisRequest& request, std::ostream& log)
{
    return guarded(log, [&] {
        DatasetSpec spec;
        spec.path = request.dataset.string();
        spec.resolved = request.dataset;
        spec.format = request.format;
        spec.context_columns = request.context_columns;
        auto loaded = load_dataset(spec);
        if (loaded.ratings.empty()) {
            throw ValidationError("dataset holds no ratings");
        }

        auto histogram = rating_histogram(loaded.ratings);
        Json result{{"histogram", to_json(histogram)}, {"value_fit", nullptr}, {"item_popularity_fit", nullptr}};
        try {
            result["value_fit"] = to_json(fit_histogram(histogram));
        } catch (const std::invalid_argument& e) {
            log << "note: no value fit: " << e.what() << '\n';
        }
        try {
            result["item_popularity_fit"] = to_json(fit_item_popularity(loaded.ratings));
        } catch (const std::invalid_argument& e) {
            log << "note: no popularity fit: " << e.what() << '\n';
        }

        ensure_directory(request.output_dir);
        write_file_atomic(request.output_dir / "histogram.json", json_text(to_json(histogram)));
        write_file_atomic(request.output_dir / "histogram.csv", to_csv(histogram));
        write_file_atomic(request.output_dir / "zipf.json", json_text(result));
        log << result.dump(2) << '\n';
        return static_cast<int>(kExitOk);
    });
}

int run_analyze_diversity(const DiversityRequest& request, std::ostream& log)
{
    return guarded(log, [&] {
        Json j;
        try {
            j = Json::parse(read_file(request.input));
        } catch (const Json::parse_error& e) {
            throw ParseError(request.input.string() + ": " + e.what());
        }
        auto input = diversity_input_from_json(j);
        double ordered = diversity_ordered(input);
        double invariant = diversity_order_invariant(input, request.divisor);
        Json result{
            {"ordered_ln", ordered},
            {"invariant_ln", invariant},
            {"difference_ln", ordered - invariant},
            {"divisor", request.divisor == InvariantDivisor::MarketFactorial ? "market_factorial" : "watched_factorial"},
        };
        ensure_directory(request.output_dir);
        write_file_atomic(request.output_dir / "diversity.json", json_text(result));
        log << result.dump(2) << '\n';
        return static_cast<int>(kExitOk);
    });
}

int run_generate(const ZipfSpec& spec, const std::filesystem::path& out, std::ostream& log)
{
    return guarded(log, [&] {
        auto dataset = generate_zipf(spec);
        std::ostringstream text;
        write_movielens(text, dataset, MovieLensFormat::Tab100K);
        ensure_directory(out.parent_path());
        write_file_atomic(out, text.str());
        log << "wrote " << dataset.size() << " ratings to " << out.string() << '\n';
        return static_cast<int>(kExitOk);
    });
}

} // namespace reclab
