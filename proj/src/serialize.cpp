#include "reclab/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace reclab {

namespace {

Json matrix_rows(const Matrix& m)
{
    Json rows = Json::array();
    for (size_t i = 0; i < m.rows(); i++) {
        auto row = m.row(i);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

Matrix matrix_from_rows(const Json& rows, size_t cols, const char* name)
{
    if (!rows.is_array()) {
        throw ParseError(std::string("\"") + name + "\" must be an array of rows");
    }
    std::vector<double> data;
    data.reserve(rows.size() * cols);
    for (const auto& row : rows) {
        if (!row.is_array() || row.size() != cols) {
            throw ParseError(std::string("every row of \"") + name + "\" must hold " + std::to_string(cols) +
                             " numbers");
        }
        for (const auto& x : row) {
            data.push_back(x.get<double>());
        }
    }
    return Matrix(rows.size(), cols, std::move(data));
}

std::string format_double(double x)
{
    // Same shortest round-trip text nlohmann uses for JSON numbers.
    return Json(x).dump();
}

template<typename T> void read_field(const Json& j, const char* key, T& out)
{
    if (j.contains(key)) {
        out = j.at(key).get<T>();
    }
}

} // namespace

Json to_json(const FactorModel& model)
{
    return Json{{"k", model.k()}, {"U", matrix_rows(model.users())}, {"V", matrix_rows(model.items())}};
}

FactorModel factor_model_from_json(const Json& j)
{
    try {
        auto k = j.at("k").get<size_t>();
        return FactorModel(matrix_from_rows(j.at("U"), k, "U"), matrix_from_rows(j.at("V"), k, "V"));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("factor model JSON: ") + e.what());
    }
}

Json to_json(const PowerMatModel& model)
{
    Json j = to_json(model.factors);
    j["alpha"] = model.alpha;
    j["beta"] = model.beta;
    j["sigma_u"] = model.sigma_u;
    j["sigma_v"] = model.sigma_v;
    return j;
}

PowerMatModel powermat_model_from_json(const Json& j)
{
    try {
        return PowerMatModel{factor_model_from_json(j), j.at("alpha").get<std::vector<double>>(),
                             j.at("beta").get<double>(), j.at("sigma_u").get<double>(),
                             j.at("sigma_v").get<double>()};
    } catch (const Json::exception& e) {
        throw ParseError(std::string("PowerMat model JSON: ") + e.what());
    }
}

Json to_json(const SimilarityMatrix& sims)
{
    return Json{{"n", sims.size()}, {"scores", matrix_rows(sims.scores())}};
}

SimilarityMatrix similarity_from_json(const Json& j)
{
    try {
        auto n = j.at("n").get<size_t>();
        return SimilarityMatrix(matrix_from_rows(j.at("scores"), n, "scores"));
    } catch (const Json::exception& e) {
        throw ParseError(std::string("similarity JSON: ") + e.what());
    }
}

Json to_json(const TrainConfig& cfg)
{
    return Json{
        {"gamma", cfg.gamma},         {"k", cfg.k},
        {"epochs", cfg.epochs},       {"seed", cfg.seed},
        {"eps_floor", cfg.eps_floor}, {"init_lo", cfg.init_lo},
        {"init_hi", cfg.init_hi},     {"samples_per_epoch", cfg.samples_per_epoch},
        {"p_max", cfg.p_max},
    };
}

TrainConfig train_config_from_json(const Json& j, const TrainConfig& base)
{
    if (!j.is_object()) {
        throw ParseError("training configuration must be a JSON object");
    }
    static const char* kKnown[] = {"gamma",   "k",       "epochs",        "seed", "eps_floor",
                                   "init_lo", "init_hi", "samples_per_epoch", "p_max"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
            throw ParseError("unknown training option \"" + key + "\"");
        }
    }
    TrainConfig cfg = base;
    try {
        read_field(j, "gamma", cfg.gamma);
        read_field(j, "k", cfg.k);
        read_field(j, "epochs", cfg.epochs);
        read_field(j, "seed", cfg.seed);
        read_field(j, "eps_floor", cfg.eps_floor);
        read_field(j, "init_lo", cfg.init_lo);
        read_field(j, "init_hi", cfg.init_hi);
        read_field(j, "samples_per_epoch", cfg.samples_per_epoch);
        read_field(j, "p_max", cfg.p_max);
    } catch (const Json::exception& e) {
        throw ParseError(std::string("training configuration: ") + e.what());
    }
    return cfg;
}

Json to_json(const EvalReport& report)
{
    Json rows = Json::array();
    for (const auto& e : report.entries) {
        rows.push_back(Json{{"algo", e.algorithm}, {"mae", e.mae}, {"n", e.n_test_predictions}});
    }
    return Json{{"split", {{"test_fraction", report.split_ratio}, {"seed", report.seed}}}, {"rows", rows}};
}

std::string to_csv(const EvalReport& report)
{
    std::ostringstream out;
    out << "algo,mae,n\n";
    for (const auto& e : report.entries) {
        out << e.algorithm << ',' << format_double(e.mae) << ',' << e.n_test_predictions << '\n';
    }
    return out.str();
}

Json to_json(const RatingHistogram& histogram)
{
    Json counts = Json::object();
    for (int v = 1; v <= histogram.r_max(); v++) {
        counts[std::to_string(v)] = histogram.count(v);
    }
    return Json{{"r_max", histogram.r_max()}, {"total", histogram.total()}, {"counts", counts}};
}

std::string to_csv(const RatingHistogram& histogram)
{
    std::ostringstream out;
    out << "value,count\n";
    for (int v = 1; v <= histogram.r_max(); v++) {
        out << v << ',' << histogram.count(v) << '\n';
    }
    return out.str();
}

Json to_json(const PowerLawFit& fit)
{
    return Json{{"exponent", fit.exponent}, {"log_intercept", fit.log_intercept}, {"r_squared", fit.r_squared}};
}

DiversityInput diversity_input_from_json(const Json& j)
{
    DiversityInput input;
    try {
        input.market_size = j.at("N").get<uint64_t>();
        for (const auto& g : j.at("groups")) {
            input.groups.push_back(DiversityGroup{g.at("K").get<uint64_t>(), g.at("M").get<uint64_t>()});
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("diversity input JSON: ") + e.what());
    }
    input.validate();
    return input;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write " + tmp.string());
        }
        out << content;
        if (!out.flush()) {
            throw Error("write failed for " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace reclab
