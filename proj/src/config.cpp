#include "tnn/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tnn/errors.hpp"

namespace tnn {
namespace {

const std::set<std::string, std::less<>> kKeys = {
    "problem", "dimension", "rank", "depth", "width", "activation", "subintervals",
    "points_per_subinterval", "optimizer", "learning_rate", "lr_segments", "epochs",
    "log_every", "seed", "output_dir", "truncation"};

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

struct Entry {
    std::string value;
    int line = 0;
};

template <typename T>
T parse_integer(const std::string& key, const Entry& e) {
    T out{};
    const char* begin = e.value.data();
    const char* end = begin + e.value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc() || ptr != end) {
        throw ConfigError(key, e.line, "expected an integer, got '" + e.value + "'");
    }
    return out;
}

double parse_real(const std::string& key, const std::string& text, int line) {
    double out = 0.0;
    const std::string_view t = trim(text);
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out)) {
        throw ConfigError(key, line, "expected a number, got '" + text + "'");
    }
    return out;
}

std::vector<LrSegment> parse_segments(const Entry& e) {
    std::vector<LrSegment> segments;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("lr_segments", e.line, "expected 'epochs:rate' pairs, got '" + item + "'");
        }
        Entry count{std::string(trim(std::string_view(item).substr(0, colon))), e.line};
        LrSegment s;
        s.epochs = parse_integer<std::int64_t>("lr_segments", count);
        s.rate = parse_real("lr_segments", item.substr(colon + 1), e.line);
        segments.push_back(s);
    }
    if (segments.empty()) throw ConfigError("lr_segments", e.line, "no segments given");
    return segments;
}

std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace

RunConfig default_config(const std::string& problem, int dimension) {
    RunConfig c;
    c.problem = problem;
    c.dimension = dimension;
    const bool ultra = dimension > kUltraDimension;
    double rate = 0.0;
    if (problem == "laplace") {
        c.rank = 10;
        c.width = ultra ? 20 : 50;
        c.subintervals = ultra ? 50 : 10;
        c.points_per_subinterval = ultra ? 4 : 16;
        rate = ultra ? 1e-4 : 3e-3;
        c.epochs = ultra ? 50000 : 100000;
    } else if (problem == "harmonic") {
        c.rank = 10;
        c.width = ultra ? 20 : 50;
        c.subintervals = ultra ? 50 : 100;
        c.points_per_subinterval = ultra ? 4 : 16;
        rate = ultra ? 1e-3 : 1e-2;
        c.epochs = 100000;
    } else if (problem == "coupled") {
        c.rank = 20;
        c.subintervals = 100;
        c.points_per_subinterval = 16;
        rate = 1e-3;
        c.epochs = 500000;
    } else if (problem == "neumann") {
        c.rank = 2 * std::max(dimension, 1);
        c.subintervals = 10;
        c.points_per_subinterval = 16;
        rate = 1e-3;
        c.epochs = 100000;
    } else {
        throw ConfigError("problem", 0, "unknown problem '" + problem +
                                            "' (expected laplace, harmonic, coupled or neumann)");
    }
    c.lr_segments = {{c.epochs, rate}};
    c.output_dir = "runs/" + problem + "_d" + std::to_string(dimension);
    return c;
}

RunConfig parse_config(std::string_view text) {
    std::map<std::string, Entry, std::less<>> entries;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", line_no, "expected 'key = value', got '" + std::string(line) + "'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (!kKeys.contains(key)) throw ConfigError(key, line_no, "unknown key");
        if (value.empty()) throw ConfigError(key, line_no, "missing value");
        if (entries.contains(key)) throw ConfigError(key, line_no, "duplicate key");
        entries[key] = {value, line_no};
    }

    for (const char* required : {"problem", "dimension"}) {
        if (!entries.contains(required)) throw ConfigError(required, 0, "required key is missing");
    }
    const Entry& dim_entry = entries["dimension"];
    const int dimension = parse_integer<int>("dimension", dim_entry);
    if (dimension < 1) throw ConfigError("dimension", dim_entry.line, "must be positive");
    RunConfig c;
    try {
        c = default_config(entries["problem"].value, dimension);
    } catch (const ConfigError& e) {
        throw ConfigError("problem", entries["problem"].line, e.what());
    }

    auto get_int = [&](const char* key, int& out) {
        if (auto it = entries.find(key); it != entries.end()) out = parse_integer<int>(key, it->second);
    };
    auto line_of = [&](const char* key) {
        auto it = entries.find(key);
        return it == entries.end() ? 0 : it->second.line;
    };
    get_int("rank", c.rank);
    get_int("depth", c.depth);
    get_int("width", c.width);
    get_int("subintervals", c.subintervals);
    get_int("points_per_subinterval", c.points_per_subinterval);
    if (auto it = entries.find("activation"); it != entries.end()) {
        try {
            c.activation = parse_activation(it->second.value);
        } catch (const std::exception& e) {
            throw ConfigError("activation", it->second.line, e.what());
        }
    }
    if (auto it = entries.find("optimizer"); it != entries.end()) {
        try {
            c.optimizer = parse_optimizer(it->second.value);
        } catch (const std::exception& e) {
            throw ConfigError("optimizer", it->second.line, e.what());
        }
    }
    if (auto it = entries.find("log_every"); it != entries.end()) {
        c.log_every = parse_integer<std::int64_t>("log_every", it->second);
    }
    if (auto it = entries.find("seed"); it != entries.end()) {
        c.seed = parse_integer<std::uint64_t>("seed", it->second);
    }
    if (auto it = entries.find("output_dir"); it != entries.end()) c.output_dir = it->second.value;
    if (auto it = entries.find("truncation"); it != entries.end()) {
        c.truncation = parse_real("truncation", it->second.value, it->second.line);
    }

    const bool has_rate = entries.contains("learning_rate");
    const bool has_segments = entries.contains("lr_segments");
    const bool has_epochs = entries.contains("epochs");
    if (has_rate && has_segments) {
        throw ConfigError("lr_segments", line_of("lr_segments"), "give either learning_rate or lr_segments");
    }
    if (has_epochs) {
        c.epochs = parse_integer<std::int64_t>("epochs", entries["epochs"]);
        if (c.epochs < 0) throw ConfigError("epochs", line_of("epochs"), "must be non-negative");
    }
    if (has_segments) {
        c.lr_segments = parse_segments(entries["lr_segments"]);
        std::int64_t sum = 0;
        for (const auto& s : c.lr_segments) sum += s.epochs;
        if (!has_epochs) c.epochs = sum;
    } else {
        const double rate = has_rate ? parse_real("learning_rate", entries["learning_rate"].value,
                                                  line_of("learning_rate"))
                                     : c.lr_segments.front().rate;
        if (c.epochs > 0) {
            c.lr_segments = {{c.epochs, rate}};
        } else {
            c.lr_segments.clear();
            if (has_rate && !(rate > 0.0)) {
                throw ConfigError("learning_rate", line_of("learning_rate"), "must be positive");
            }
        }
    }

    try {
        validate_config(c);
    } catch (const ConfigError& e) {
        const int line = line_of(e.key().c_str());
        throw ConfigError(e.key(), line, std::string(e.what()).substr(std::string(e.what()).find(": ") + 2));
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

void validate_config(const RunConfig& c) {
    auto positive = [](const char* key, long long v) {
        if (v < 1) throw ConfigError(key, 0, "must be positive, got " + std::to_string(v));
    };
    if (c.problem != "laplace" && c.problem != "harmonic" && c.problem != "coupled" &&
        c.problem != "neumann") {
        throw ConfigError("problem", 0, "unknown problem '" + c.problem + "'");
    }
    positive("dimension", c.dimension);
    if (c.problem == "coupled" && c.dimension < 2) {
        throw ConfigError("dimension", 0, "the coupled oscillator needs dimension >= 2");
    }
    positive("rank", c.rank);
    positive("depth", c.depth);
    positive("width", c.width);
    positive("subintervals", c.subintervals);
    positive("points_per_subinterval", c.points_per_subinterval);
    if (c.points_per_subinterval > 64) {
        throw ConfigError("points_per_subinterval", 0, "at most 64 Gauss points are supported");
    }
    positive("log_every", c.log_every);
    if (c.epochs < 0) throw ConfigError("epochs", 0, "must be non-negative");
    if (!(c.truncation > 0.0) || !std::isfinite(c.truncation)) {
        throw ConfigError("truncation", 0, "must be a positive half-width");
    }
    std::int64_t sum = 0;
    for (const auto& s : c.lr_segments) {
        if (s.epochs < 1) throw ConfigError("lr_segments", 0, "segment epochs must be positive");
        if (!(s.rate > 0.0) || !std::isfinite(s.rate)) {
            throw ConfigError(c.lr_segments.size() == 1 ? "learning_rate" : "lr_segments", 0,
                              "learning rate must be positive");
        }
        sum += s.epochs;
    }
    if (sum != c.epochs) {
        throw ConfigError("lr_segments", 0,
                          "segment epochs sum to " + std::to_string(sum) + " but epochs is " +
                              std::to_string(c.epochs));
    }
    if (c.output_dir.empty()) throw ConfigError("output_dir", 0, "must not be empty");
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "problem = " << c.problem << '\n'
        << "dimension = " << c.dimension << '\n'
        << "rank = " << c.rank << '\n'
        << "depth = " << c.depth << '\n'
        << "width = " << c.width << '\n'
        << "activation = " << to_string(c.activation) << '\n'
        << "subintervals = " << c.subintervals << '\n'
        << "points_per_subinterval = " << c.points_per_subinterval << '\n'
        << "optimizer = " << to_string(c.optimizer) << '\n';
    if (!c.lr_segments.empty()) {
        out << "lr_segments = ";
        for (std::size_t k = 0; k < c.lr_segments.size(); ++k) {
            if (k) out << ", ";
            out << c.lr_segments[k].epochs << ':' << format_real(c.lr_segments[k].rate);
        }
        out << '\n';
    }
    out << "epochs = " << c.epochs << '\n'
        << "log_every = " << c.log_every << '\n'
        << "seed = " << c.seed << '\n'
        << "output_dir = " << c.output_dir << '\n'
        << "truncation = " << format_real(c.truncation) << '\n';
    return out.str();
}

Problem make_problem(const RunConfig& c) {
    return make_problem(c.problem, c.dimension, Interval{-c.truncation, c.truncation});
}

std::vector<Grid1D> make_grids(const RunConfig& c, const Problem& problem) {
    std::vector<Grid1D> grids;
    grids.reserve(problem.domain.size());
    for (const Interval& iv : problem.domain) {
        grids.emplace_back(iv.lo, iv.hi, c.subintervals, c.points_per_subinterval);
    }
    return grids;
}

ModelOptions model_options(const RunConfig& c, const Problem& problem) {
    ModelOptions o;
    o.dimension = c.dimension;
    o.rank = c.rank;
    o.depth = c.depth;
    o.width = c.width;
    o.activation = c.activation;
    o.boundary = problem.boundary();
    return o;
}

TrainSchedule make_schedule(const RunConfig& c) {
    TrainSchedule s;
    s.epochs = c.epochs;
    s.segments = c.lr_segments;
    s.optimizer = c.optimizer;
    s.log_every = c.log_every;
    return s;
}

}  // namespace tnn
