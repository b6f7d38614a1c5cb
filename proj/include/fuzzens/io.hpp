#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "batch.hpp"
#include "core.hpp"
#include "ensemble.hpp"
#include "online.hpp"
#include "random.hpp"

namespace fuzzens {

using json = nlohmann::json;

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(location(line, column) + what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    static std::string location(std::size_t line, std::size_t column) {
        if (line == 0) return "";
        std::string s = "line " + std::to_string(line);
        if (column != 0) s += ", column " + std::to_string(column);
        return s + ": ";
    }

    std::size_t line_;
    std::size_t column_;
};

class VersionError : public Error {
public:
    using Error::Error;
};

// 17 significant digits: enough for any double to survive a text round trip.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

enum class PointFormat { csv, jsonl };

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::optional<double> parse_number(std::string_view cell) {
    cell = trim(cell);
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    if (cell.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    return v;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

}  // namespace detail

/// Sequential reader of feature vectors from CSV (optional header line) or
/// JSONL ({"x": [...]} per line). Blank lines are skipped.
class PointReader {
public:
    PointReader(std::istream& in, PointFormat format) : in_(in), format_(format) {}

    std::optional<FeatureVector> next() {
        std::string raw;
        while (std::getline(in_, raw)) {
            ++line_;
            const auto line = detail::trim(raw);
            if (line.empty()) continue;
            auto x = format_ == PointFormat::csv ? parse_csv(line) : parse_jsonl(line);
            if (!x) continue;  // header
            if (dim_ == 0)
                dim_ = x->size();
            else if (x->size() != dim_)
                throw ParseError("expected " + std::to_string(dim_) + " values, got " +
                                     std::to_string(x->size()),
                                 line_);
            return x;
        }
        return std::nullopt;
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t dim() const noexcept { return dim_; }

private:
    std::optional<FeatureVector> parse_csv(std::string_view line) {
        const auto cells = detail::split_commas(line);
        if (!seen_row_) {
            seen_row_ = true;
            // a header is a first line with no numeric cell at all
            if (std::none_of(cells.begin(), cells.end(),
                             [](std::string_view c) { return detail::parse_number(c).has_value(); }))
                return std::nullopt;
        }
        FeatureVector x;
        x.reserve(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const auto v = detail::parse_number(cells[i]);
            if (!v) {
                throw ParseError("non-numeric value '" + std::string(detail::trim(cells[i])) + "'",
                                 line_, i + 1);
            }
            if (!std::isfinite(*v)) throw ParseError("non-finite value", line_, i + 1);
            x.push_back(*v);
        }
        return x;
    }

    std::optional<FeatureVector> parse_jsonl(std::string_view line) {
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), line_);
        }
        if (!doc.is_object() || !doc.contains("x") || !doc["x"].is_array())
            throw ParseError("expected an object with an array under \"x\"", line_);
        FeatureVector x;
        const auto& arr = doc["x"];
        for (std::size_t i = 0; i < arr.size(); ++i) {
            if (!arr[i].is_number()) throw ParseError("non-numeric value", line_, i + 1);
            const double v = arr[i].get<double>();
            if (!std::isfinite(v)) throw ParseError("non-finite value", line_, i + 1);
            x.push_back(v);
        }
        if (x.empty()) throw ParseError("empty feature vector", line_);
        return x;
    }

    std::istream& in_;
    PointFormat format_;
    std::size_t line_ = 0;
    std::size_t dim_ = 0;
    bool seen_row_ = false;
};

inline std::vector<FeatureVector> read_points(std::istream& in, PointFormat format) {
    PointReader reader(in, format);
    std::vector<FeatureVector> points;
    while (auto x = reader.next()) points.push_back(std::move(*x));
    return points;
}

inline void write_points_csv(std::ostream& out, std::span<const FeatureVector> points) {
    for (const auto& x : points) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (i) out << ',';
            out << format_double(x[i]);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------

/// Per-feature min-max bounds. In streaming use the bounds only expand.
struct NormalizerState {
    std::vector<double> lo;
    std::vector<double> hi;

    bool empty() const noexcept { return lo.empty(); }

    void observe(std::span<const double> x) {
        if (lo.empty()) {
            lo.assign(x.begin(), x.end());
            hi.assign(x.begin(), x.end());
            return;
        }
        if (x.size() != lo.size()) throw DimensionError(lo.size(), x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            lo[i] = std::min(lo[i], x[i]);
            hi[i] = std::max(hi[i], x[i]);
        }
    }

    static NormalizerState fit(std::span<const FeatureVector> points) {
        NormalizerState n;
        for (const auto& x : points) n.observe(x);
        return n;
    }

    friend bool operator==(const NormalizerState&, const NormalizerState&) = default;
};

/// (v - min) / (max - min) per feature; constant features map to 0.5.
inline FeatureVector normalize(std::span<const double> x, const NormalizerState& norm) {
    if (x.size() != norm.lo.size()) throw DimensionError(norm.lo.size(), x.size());
    FeatureVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double range = norm.hi[i] - norm.lo[i];
        out[i] = range > 0.0 ? (x[i] - norm.lo[i]) / range : 0.5;
    }
    return out;
}

// ---------------------------------------------------------------------------

struct SyntheticSpec {
    std::vector<FeatureVector> means;
    std::vector<double> stddevs;
    std::vector<double> weights;
    std::size_t count = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (means.empty()) throw ConfigError("synthetic spec needs at least one blob");
        const std::size_t dim = means.front().size();
        if (dim == 0) throw ConfigError("blob means must be non-empty");
        for (const auto& mu : means) {
            if (mu.size() != dim) throw DimensionError(dim, mu.size());
            if (!all_finite(mu)) throw ConfigError("blob means must be finite");
        }
        if (stddevs.size() != means.size()) throw ConfigError("need one stddev per blob");
        for (double s : stddevs)
            if (!(s >= 0.0) || !std::isfinite(s)) throw ConfigError("stddevs must be finite and >= 0");
        if (weights.size() != means.size()) throw ConfigError("need one weight per blob");
        double total = 0.0;
        for (double w : weights) {
            if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be finite and >= 0");
            total += w;
        }
        if (!(total > 0.0)) throw ConfigError("weights must not all be zero");
    }
};

struct SyntheticData {
    std::vector<FeatureVector> points;
    std::vector<std::size_t> labels;
};

/// Isotropic Gaussian blobs; each point first draws its blob by weight.
inline SyntheticData gen_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    SyntheticData data;
    data.points.reserve(spec.count);
    data.labels.reserve(spec.count);
    for (std::size_t k = 0; k < spec.count; ++k) {
        const std::size_t blob = rng.categorical(spec.weights);
        FeatureVector x(spec.means[blob]);
        for (double& v : x) v += spec.stddevs[blob] * rng.normal();
        data.points.push_back(std::move(x));
        data.labels.push_back(blob);
    }
    return data;
}

/// Three overlapping blobs in five dimensions, 302 points: the shape of the
/// student-knowledge data set, values on a [0, 1] "degree" scale.
inline SyntheticSpec knowledge_like_spec(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.means = {{0.30, 0.30, 0.35, 0.30, 0.15},
                  {0.45, 0.40, 0.45, 0.50, 0.50},
                  {0.40, 0.50, 0.50, 0.70, 0.85}};
    spec.stddevs = {0.08, 0.08, 0.08};
    spec.weights = {0.3, 0.4, 0.3};
    spec.count = 302;
    spec.seed = seed;
    return spec;
}

// ---------------------------------------------------------------------------

inline constexpr int kSchemaVersion = 1;

struct BatchModel {
    std::string method = "fcm";  // fcm | vf | poss
    double beta = 2.0;
    double alpha = 1.0;
    ClusterModel model;
    std::vector<double> mu;  // poss only

    friend bool operator==(const BatchModel&, const BatchModel&) = default;
};

struct ModelSnapshot {
    int schema_version = kSchemaVersion;
    std::string kind = "batch";  // batch | fsom | ensemble
    std::uint64_t seed = 0;
    std::optional<NormalizerState> normalizer;
    std::optional<BatchModel> batch;
    std::optional<EnsembleState> ensemble;

    friend bool operator==(const ModelSnapshot& a, const ModelSnapshot& b) {
        return a.schema_version == b.schema_version && a.kind == b.kind && a.seed == b.seed &&
               a.normalizer == b.normalizer && a.batch == b.batch && a.ensemble == b.ensemble;
    }
};

namespace detail {

inline const char* mode_name(Mode mode) {
    return mode == Mode::probabilistic ? "prob" : "poss";
}

inline Mode parse_mode(const std::string& s) {
    if (s == "prob") return Mode::probabilistic;
    if (s == "poss") return Mode::possibilistic;
    throw ParseError("unknown mode '" + s + "'");
}

inline const char* schedule_name(ScheduleKind kind) {
    return kind == ScheduleKind::harmonic ? "harmonic" : "constant";
}

inline ScheduleKind parse_schedule(const std::string& s) {
    if (s == "harmonic") return ScheduleKind::harmonic;
    if (s == "constant") return ScheduleKind::constant;
    throw ParseError("unknown schedule '" + s + "'");
}

inline json member_to_json(const FsomState& s, const PcAccumulator& pc) {
    json j;
    j["alpha"] = s.alpha.value();
    j["mode"] = mode_name(s.mode);
    j["k"] = s.k;
    j["schedule"] = {{"kind", schedule_name(s.schedule.kind)},
                     {"eta0", s.schedule.eta0},
                     {"tau", s.schedule.tau}};
    j["prototypes"] = s.model.prototypes;
    if (s.poss) {
        const auto& p = *s.poss;
        json stats = json::array();
        for (const auto& st : p.stats)
            stats.push_back({{"anchor", st.anchor},
                             {"sum", st.sum},
                             {"weight", st.weight},
                             {"sq_sum", st.sq_sum}});
        j["poss"] = {{"mu", p.mu},
                     {"stats", stats},
                     {"spawn_threshold", p.spawn_threshold},
                     {"m_max", p.m_max},
                     {"warmup_length", p.warmup_length},
                     {"seeded", p.seeded}};
    } else {
        j["poss"] = nullptr;
    }
    j["pc"] = {{"count", pc.count}, {"mean", pc.mean}, {"window", pc.window}, {"recent", pc.recent}};
    return j;
}

inline void member_from_json(const json& j, FsomState& s, PcAccumulator& pc) {
    s.alpha = BlendParam(j.at("alpha").get<double>());
    s.mode = parse_mode(j.at("mode").get<std::string>());
    s.k = j.at("k").get<std::uint64_t>();
    const auto& sch = j.at("schedule");
    s.schedule.kind = parse_schedule(sch.at("kind").get<std::string>());
    s.schedule.eta0 = sch.at("eta0").get<double>();
    s.schedule.tau = sch.at("tau").get<double>();
    s.schedule.validate();
    s.model = ClusterModel(j.at("prototypes").get<std::vector<FeatureVector>>());
    if (!j.at("poss").is_null()) {
        const auto& p = j.at("poss");
        PossOnlineState poss;
        poss.mu = p.at("mu").get<std::vector<double>>();
        for (const auto& st : p.at("stats")) {
            ClusterStats cs;
            cs.anchor = st.at("anchor").get<FeatureVector>();
            cs.sum = st.at("sum").get<FeatureVector>();
            cs.weight = st.at("weight").get<double>();
            cs.sq_sum = st.at("sq_sum").get<double>();
            poss.stats.push_back(std::move(cs));
        }
        poss.spawn_threshold = p.at("spawn_threshold").get<double>();
        poss.m_max = p.at("m_max").get<std::size_t>();
        poss.warmup_length = p.at("warmup_length").get<std::uint64_t>();
        poss.seeded = p.at("seeded").get<bool>();
        if (poss.mu.size() != s.model.m() || poss.stats.size() != s.model.m())
            throw ParseError("possibilistic state does not match the prototype count");
        s.poss = std::move(poss);
    } else if (s.mode == Mode::possibilistic) {
        throw ParseError("possibilistic member without possibilistic state");
    }
    const auto& acc = j.at("pc");
    pc.count = acc.at("count").get<std::uint64_t>();
    pc.mean = acc.at("mean").get<double>();
    pc.window = acc.at("window").get<std::size_t>();
    pc.recent = acc.at("recent").get<std::deque<double>>();
}

}  // namespace detail

inline json snapshot_to_json(const ModelSnapshot& snap) {
    json j;
    j["schema_version"] = snap.schema_version;
    j["kind"] = snap.kind;
    j["seed"] = snap.seed;
    if (snap.normalizer)
        j["normalizer"] = {{"lo", snap.normalizer->lo}, {"hi", snap.normalizer->hi}};
    else
        j["normalizer"] = nullptr;
    if (snap.batch) {
        const auto& b = *snap.batch;
        j["batch"] = {{"method", b.method},
                      {"beta", b.beta},
                      {"alpha", b.alpha},
                      {"prototypes", b.model.prototypes},
                      {"mu", b.mu}};
    }
    if (snap.ensemble) {
        json members = json::array();
        for (std::size_t p = 0; p < snap.ensemble->size(); ++p)
            members.push_back(detail::member_to_json(snap.ensemble->members[p], snap.ensemble->pcs[p]));
        j["members"] = std::move(members);
    }
    return j;
}

inline ModelSnapshot snapshot_from_json(const json& j) {
    ModelSnapshot snap;
    try {
        snap.schema_version = j.at("schema_version").get<int>();
        if (snap.schema_version != kSchemaVersion)
            throw VersionError("unsupported model schema_version " +
                               std::to_string(snap.schema_version) + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
        snap.kind = j.at("kind").get<std::string>();
        snap.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("normalizer").is_null()) {
            NormalizerState n;
            n.lo = j["normalizer"].at("lo").get<std::vector<double>>();
            n.hi = j["normalizer"].at("hi").get<std::vector<double>>();
            if (n.lo.size() != n.hi.size()) throw ParseError("normalizer bounds differ in length");
            snap.normalizer = std::move(n);
        }
        if (snap.kind == "batch") {
            const auto& b = j.at("batch");
            BatchModel bm;
            bm.method = b.at("method").get<std::string>();
            bm.beta = b.at("beta").get<double>();
            bm.alpha = b.at("alpha").get<double>();
            bm.model = ClusterModel(b.at("prototypes").get<std::vector<FeatureVector>>());
            bm.mu = b.at("mu").get<std::vector<double>>();
            snap.batch = std::move(bm);
        } else if (snap.kind == "fsom" || snap.kind == "ensemble") {
            std::vector<FsomState> members;
            std::vector<PcAccumulator> pcs;
            for (const auto& mj : j.at("members")) {
                FsomState s;
                PcAccumulator pc;
                detail::member_from_json(mj, s, pc);
                members.push_back(std::move(s));
                pcs.push_back(std::move(pc));
            }
            if (members.empty()) throw ParseError("model has no members");
            auto ens = make_ensemble(std::move(members));
            ens.pcs = std::move(pcs);
            snap.ensemble = std::move(ens);
        } else {
            throw ParseError("unknown model kind '" + snap.kind + "'");
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model: ") + e.what());
    } catch (const ParseError&) {
        throw;
    } catch (const VersionError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError(std::string("invalid model: ") + e.what());
    }
    return snap;
}

inline std::string dump_snapshot(const ModelSnapshot& snap) {
    return snapshot_to_json(snap).dump(2) + "\n";
}

inline void save_model(const ModelSnapshot& snap, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << dump_snapshot(snap);
    if (!out) throw Error("failed writing '" + path + "'");
}

inline ModelSnapshot load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    json j;
    try {
        j = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed model file: ") + e.what());
    }
    return snapshot_from_json(j);
}

// ---------------------------------------------------------------------------

struct ResultRecord {
    std::uint64_t k = 0;
    MembershipRow memberships;
    double winner_alpha = 1.0;
    std::vector<double> pc;
    std::optional<std::size_t> spawn;
};

inline void write_result(std::ostream& out, const ResultRecord& r) {
    json j;
    j["k"] = r.k;
    j["memberships"] = r.memberships;
    j["winner_alpha"] = r.winner_alpha;
    j["pc"] = r.pc;
    if (r.spawn) j["spawn"] = *r.spawn;
    out << j.dump() << '\n';
    if (!out) throw Error("failed writing result record");
}

inline void write_results(std::ostream& out, std::span<const ResultRecord> records) {
    for (const auto& r : records) write_result(out, r);
}

inline void write_trajectory_header(std::ostream& out, std::size_t dim) {
    out << "step,member,cluster";
    for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
    out << '\n';
}

inline void write_trajectory_rows(std::ostream& out, std::uint64_t step, std::size_t member,
                                  const ClusterModel& model) {
    for (std::size_t j = 0; j < model.m(); ++j) {
        out << step << ',' << member << ',' << j;
        for (double v : model.prototypes[j]) out << ',' << format_double(v);
        out << '\n';
    }
}

}  // namespace fuzzens
