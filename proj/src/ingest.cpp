#include "reclab/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "reclab/random.hpp"

namespace reclab {

uint32_t IdMap::add(std::string_view raw)
{
    auto found = index_.find(std::string(raw));
    if (found != index_.end()) {
        return found->second;
    }
    auto next = static_cast<uint32_t>(raw_.size());
    index_.emplace(std::string(raw), next);
    raw_.emplace_back(raw);
    return next;
}

std::optional<uint32_t> IdMap::find(std::string_view raw) const
{
    auto found = index_.find(std::string(raw));
    if (found == index_.end()) {
        return std::nullopt;
    }
    return found->second;
}

namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

template<typename T> std::optional<T> parse_number(std::string_view text)
{
    text = trim(text);
    T value{};
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || end != text.data() + text.size() || text.empty()) {
        return std::nullopt;
    }
    return value;
}

std::vector<std::string_view> split_on(std::string_view line, std::string_view sep)
{
    std::vector<std::string_view> fields;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + sep.size();
    }
    return fields;
}

std::string lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
    return out;
}

uint64_t cell_key(uint32_t user, uint32_t item)
{
    return (static_cast<uint64_t>(user) << 32) | item;
}

/// Accumulates ratings with last-occurrence-wins deduplication.
class RatingsBuilder
{
public:
    void add(uint32_t user, uint32_t item, int value, std::optional<int64_t> timestamp)
    {
        auto [it, inserted] = position_.emplace(cell_key(user, item), ratings_.size());
        Rating r{user, item, value, timestamp};
        if (inserted) {
            ratings_.push_back(r);
        } else {
            ratings_[it->second] = r;
            duplicates_++;
        }
    }

    std::vector<Rating> take() { return std::move(ratings_); }
    size_t duplicates() const { return duplicates_; }

private:
    std::unordered_map<uint64_t, size_t> position_;
    std::vector<Rating> ratings_;
    size_t duplicates_ = 0;
};

std::ifstream open_or_throw(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open " + path.string());
    }
    return in;
}

} // namespace

ParsedRatings parse_movielens(std::istream& source, MovieLensFormat format)
{
    const std::string_view sep = format == MovieLensFormat::Tab100K ? "\t" : "::";
    constexpr int kMovieLensMax = 5;

    IdMap users;
    IdMap items;
    RatingsBuilder builder;
    std::string line;
    size_t line_number = 0;
    while (std::getline(source, line)) {
        line_number++;
        std::string_view view = line;
        if (!view.empty() && view.back() == '\r') {
            view.remove_suffix(1);
        }
        if (trim(view).empty()) {
            continue;
        }
        auto fields = split_on(view, sep);
        if (fields.size() != 4) {
            throw ParseError("expected 4 fields, found " + std::to_string(fields.size()), line_number);
        }
        auto user_raw = trim(fields[0]);
        auto item_raw = trim(fields[1]);
        if (user_raw.empty() || item_raw.empty()) {
            throw ParseError("empty user or item id", line_number);
        }
        auto value = parse_number<int>(fields[2]);
        if (!value) {
            throw ParseError("rating '" + std::string(fields[2]) + "' is not an integer", line_number);
        }
        auto timestamp = parse_number<int64_t>(fields[3]);
        if (!timestamp) {
            throw ParseError("timestamp '" + std::string(fields[3]) + "' is not an integer", line_number);
        }
        if (*value < 1 || *value > kMovieLensMax) {
            throw ValidationError("line " + std::to_string(line_number) + ": rating " + std::to_string(*value) +
                                  " outside [1, 5]");
        }
        builder.add(users.add(user_raw), items.add(item_raw), *value, *timestamp);
    }

    size_t n_users = users.size();
    size_t n_items = items.size();
    size_t duplicates = builder.duplicates();
    return ParsedRatings{RatingsDataset(builder.take(), n_users, n_items, kMovieLensMax), std::move(users),
                         std::move(items), duplicates};
}

ParsedRatings load_movielens(const std::filesystem::path& path, MovieLensFormat format)
{
    auto in = open_or_throw(path);
    return parse_movielens(in, format);
}

void write_movielens(std::ostream& out, const RatingsDataset& dataset, MovieLensFormat format, const IdMap* users,
                     const IdMap* items)
{
    const char* sep = format == MovieLensFormat::Tab100K ? "\t" : "::";
    for (const auto& r : dataset.ratings()) {
        if (users) {
            out << users->raw(r.user_id);
        } else {
            out << r.user_id + 1;
        }
        out << sep;
        if (items) {
            out << items->raw(r.item_id);
        } else {
            out << r.item_id + 1;
        }
        out << sep << r.value << sep << r.timestamp.value_or(0) << '\n';
    }
}

std::vector<std::string> split_csv_record(std::string_view line, size_t line_number)
{
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    bool field_was_quoted = false;
    for (size_t i = 0; i < line.size(); i++) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    i++;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"') {
            if (!field.empty() || field_was_quoted) {
                throw ParseError("stray quote inside unquoted field", line_number);
            }
            quoted = true;
            field_was_quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
            field_was_quoted = false;
        } else if (c == '\r' && i + 1 == line.size()) {
            // CRLF terminator
        } else {
            if (field_was_quoted) {
                throw ParseError("characters after closing quote", line_number);
            }
            field.push_back(c);
        }
    }
    if (quoted) {
        throw ParseError("unterminated quoted field", line_number);
    }
    fields.push_back(std::move(field));
    return fields;
}

namespace {

bool has_open_quote(std::string_view text)
{
    bool open = false;
    for (char c : text) {
        if (c == '"') {
            open = !open;
        }
    }
    return open;
}

/// Reads one CSV record, joining physical lines while a quote is open.
bool read_csv_record(std::istream& in, std::string& record, size_t& line_number, size_t& first_line)
{
    record.clear();
    std::string line;
    if (!std::getline(in, line)) {
        return false;
    }
    line_number++;
    first_line = line_number;
    record = line;
    while (has_open_quote(record) && std::getline(in, line)) {
        line_number++;
        record += '\n';
        record += line;
    }
    return true;
}

size_t require_column(const std::vector<std::string>& header, std::initializer_list<std::string_view> names,
                      std::string_view label)
{
    for (auto name : names) {
        for (size_t i = 0; i < header.size(); i++) {
            if (lower(trim(header[i])) == name) {
                return i;
            }
        }
    }
    throw SchemaError("missing required column '" + std::string(label) + "'");
}

bool is_missing_marker(std::string_view cell)
{
    cell = trim(cell);
    return cell.empty() || cell == "-1" || cell == "NA" || cell == "na" || cell == "?";
}

} // namespace

std::vector<std::string> default_comoda_context_columns()
{
    return {"mood", "location"};
}

ContextRatings parse_comoda(std::istream& source, std::span<const std::string> context_columns)
{
    std::string record;
    size_t line_number = 0;
    size_t first_line = 0;
    if (!read_csv_record(source, record, line_number, first_line)) {
        throw SchemaError("empty CSV: header row required");
    }
    auto header = split_csv_record(record, first_line);

    size_t user_col = require_column(header, {"userid", "user_id", "user"}, "userID");
    size_t item_col = require_column(header, {"itemid", "item_id", "item", "movieid"}, "itemID");
    size_t rating_col = require_column(header, {"rating"}, "rating");
    std::vector<size_t> context_cols;
    for (const auto& name : context_columns) {
        context_cols.push_back(require_column(header, {lower(name)}, name));
    }
    // Labels that are not numeric codes get per-column codes 1, 2, ...
    std::vector<IdMap> vocabularies(context_cols.size());

    IdMap users;
    IdMap items;
    RatingsBuilder builder;
    std::vector<ContextSample> samples;
    int r_max = 1;
    while (read_csv_record(source, record, line_number, first_line)) {
        if (trim(record).empty()) {
            continue;
        }
        auto fields = split_csv_record(record, first_line);
        if (fields.size() != header.size()) {
            throw ParseError("expected " + std::to_string(header.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             first_line);
        }
        auto rating_text = trim(fields[rating_col]);
        std::optional<int> value = parse_number<int>(rating_text);
        if (!value) {
            auto real = parse_number<double>(rating_text);
            if (!real || *real != std::floor(*real)) {
                throw ParseError("rating '" + std::string(rating_text) + "' is not numeric", first_line);
            }
            value = static_cast<int>(*real);
        }
        if (*value < 1) {
            throw ValidationError("line " + std::to_string(first_line) + ": rating " + std::to_string(*value) +
                                  " below 1");
        }
        auto user_raw = trim(fields[user_col]);
        auto item_raw = trim(fields[item_col]);
        if (user_raw.empty() || item_raw.empty()) {
            throw ParseError("empty user or item id", first_line);
        }

        ContextSample sample;
        sample.user_id = users.add(user_raw);
        sample.item_id = items.add(item_raw);
        sample.value = *value;
        sample.context.reserve(context_cols.size());
        for (size_t c = 0; c < context_cols.size(); c++) {
            std::string_view cell = trim(fields[context_cols[c]]);
            if (is_missing_marker(cell)) {
                sample.context.push_back(0.0);
            } else if (auto code = parse_number<double>(cell)) {
                sample.context.push_back(*code);
            } else {
                sample.context.push_back(static_cast<double>(vocabularies[c].add(cell) + 1));
            }
        }
        r_max = std::max(r_max, *value);
        builder.add(sample.user_id, sample.item_id, sample.value, std::nullopt);
        samples.push_back(std::move(sample));
    }

    size_t n_users = users.size();
    size_t n_items = items.size();
    size_t duplicates = builder.duplicates();
    ParsedRatings parsed{RatingsDataset(builder.take(), n_users, n_items, r_max), std::move(users), std::move(items),
                         duplicates};
    return ContextRatings{std::move(parsed), std::move(samples),
                          std::vector<std::string>(context_columns.begin(), context_columns.end())};
}

ContextRatings load_comoda(const std::filesystem::path& path, std::span<const std::string> context_columns)
{
    auto in = open_or_throw(path);
    return parse_comoda(in, context_columns);
}

TrainTestSplit split(const RatingsDataset& dataset, const SplitSpec& spec)
{
    if (dataset.empty()) {
        throw std::invalid_argument("cannot split an empty dataset");
    }
    if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0)) {
        throw std::invalid_argument("test_fraction must lie strictly between 0 and 1");
    }
    size_t n = dataset.size();
    auto n_test = static_cast<size_t>(std::llround(spec.test_fraction * static_cast<double>(n)));

    std::vector<size_t> order(n);
    for (size_t i = 0; i < n; i++) {
        order[i] = i;
    }
    Rng rng(spec.seed);
    rng.shuffle(std::span{order});
    std::vector<bool> in_test(n, false);
    for (size_t i = 0; i < n_test; i++) {
        in_test[order[i]] = true;
    }

    std::vector<Rating> train;
    std::vector<Rating> test;
    train.reserve(n - n_test);
    test.reserve(n_test);
    auto rows = dataset.ratings();
    for (size_t i = 0; i < n; i++) {
        (in_test[i] ? test : train).push_back(rows[i]);
    }
    return TrainTestSplit{
        RatingsDataset(std::move(train), dataset.n_users(), dataset.n_items(), dataset.r_max()),
        RatingsDataset(std::move(test), dataset.n_users(), dataset.n_items(), dataset.r_max()),
    };
}

std::vector<ContextSample> contexts_for(const RatingsDataset& dataset, std::span<const ContextSample> samples)
{
    std::unordered_set<uint64_t> cells;
    cells.reserve(dataset.size());
    for (const auto& r : dataset.ratings()) {
        cells.insert(cell_key(r.user_id, r.item_id));
    }
    std::vector<ContextSample> kept;
    for (const auto& s : samples) {
        if (cells.contains(cell_key(s.user_id, s.item_id))) {
            kept.push_back(s);
        }
    }
    return kept;
}

RatingsDataset generate_zipf(const ZipfSpec& spec)
{
    if (spec.n_users == 0 || spec.n_items == 0) {
        throw std::invalid_argument("generator needs at least one user and one item");
    }
    if (spec.n_users > UINT32_MAX || spec.n_items > UINT32_MAX) {
        throw std::invalid_argument("generator dimensions exceed 32-bit ids");
    }
    if (spec.n_ratings > spec.n_users * spec.n_items) {
        throw std::invalid_argument("infeasible: " + std::to_string(spec.n_ratings) + " ratings do not fit a " +
                                    std::to_string(spec.n_users) + " x " + std::to_string(spec.n_items) + " grid");
    }
    if (!(spec.exponent > 0.0)) {
        throw std::invalid_argument("popularity exponent must be positive");
    }
    if (spec.r_max < 1) {
        throw std::invalid_argument("r_max must be at least 1");
    }

    Rng rng(spec.seed);
    std::vector<double> weight(spec.n_items);
    for (size_t i = 0; i < spec.n_items; i++) {
        weight[i] = std::pow(static_cast<double>(i + 1), -spec.exponent);
    }
    std::vector<double> cumulative(spec.n_items);
    auto rebuild = [&] {
        double total = 0.0;
        for (size_t i = 0; i < spec.n_items; i++) {
            total += weight[i];
            cumulative[i] = total;
        }
    };
    rebuild();

    std::vector<size_t> filled(spec.n_items, 0);
    // Users still free for an item, materialized once the item is half full.
    std::vector<std::vector<uint32_t>> free_users(spec.n_items);
    std::unordered_set<uint64_t> taken;
    taken.reserve(spec.n_ratings);
    const uint64_t value_total = static_cast<uint64_t>(spec.r_max) * (spec.r_max + 1) / 2;

    std::vector<Rating> ratings;
    ratings.reserve(spec.n_ratings);
    while (ratings.size() < spec.n_ratings) {
        double draw = rng.uniform() * cumulative.back();
        auto item = static_cast<uint32_t>(std::upper_bound(cumulative.begin(), cumulative.end(), draw) -
                                          cumulative.begin());
        item = std::min<uint32_t>(item, static_cast<uint32_t>(spec.n_items - 1));
        if (weight[item] == 0.0) {
            continue;
        }

        uint32_t user;
        if (2 * filled[item] < spec.n_users) {
            do {
                user = static_cast<uint32_t>(rng.below(spec.n_users));
            } while (taken.contains(cell_key(user, item)));
        } else {
            auto& pool = free_users[item];
            if (pool.empty()) {
                for (uint32_t u = 0; u < spec.n_users; u++) {
                    if (!taken.contains(cell_key(u, item))) {
                        pool.push_back(u);
                    }
                }
            }
            size_t pick = static_cast<size_t>(rng.below(pool.size()));
            user = pool[pick];
            pool[pick] = pool.back();
            pool.pop_back();
        }
        taken.insert(cell_key(user, item));
        if (++filled[item] == spec.n_users) {
            weight[item] = 0.0;
            rebuild();
        }

        // P(value = v) = v / (1 + 2 + ... + r_max)
        uint64_t ticket = rng.below(value_total);
        int value = 1;
        while (ticket >= static_cast<uint64_t>(value)) {
            ticket -= value;
            value++;
        }
        ratings.push_back(Rating{user, item, value, std::nullopt});
    }
    return RatingsDataset(std::move(ratings), spec.n_users, spec.n_items, spec.r_max);
}

} // namespace reclab
