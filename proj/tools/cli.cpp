#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fuzzens/fuzzens.hpp"

namespace fuzzens::cli {
namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Common {
    std::string input = "-";
    std::string format = "auto";
    std::string normalize = "none";
    std::uint64_t seed = 0;
    std::string output;
    std::string model_out;
    std::string model_in;
    std::string report;
    std::string labels;
};

struct BatchArgs {
    std::string method = "fcm";
    std::size_t m = 0;
    double beta = 2.0;
    double alpha = 1.0;
    double tol = 1e-6;
    std::size_t max_iter = 300;
    std::string poss_form = "derived";
};

struct OnlineArgs {
    std::string mode = "prob";
    std::size_t m = 0;
    double alpha = 1.0;
    std::vector<double> alphas;
    double eta0 = 0.5;
    double tau = 100.0;
    std::string schedule = "harmonic";
    double spawn_threshold = 0.25;
    std::size_t m_max = 32;
    std::size_t warmup = 0;
    std::size_t pc_window = 0;
    bool parallel = false;
    std::string emit_plots;
};

struct GenArgs {
    std::string preset = "blobs";
    std::size_t m = 3;
    std::size_t dim = 2;
    std::size_t count = 1000;
    double stddev = 1.0;
    double separation = 6.0;
    std::vector<double> weights;
    std::string means;
    std::string labels_out;
};

struct EvalArgs {
    std::string memberships;
    std::string reference;
    std::optional<double> alpha;
};

// ---------------------------------------------------------------------------
// Plumbing.

// An output stream that is either a file or a borrowed stream.
class Sink {
public:
    Sink(const std::string& path, std::ostream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open '" + path + "' for writing");
            stream_ = file_.get();
        }
    }

    std::ostream& operator*() { return *stream_; }

    void finish() {
        stream_->flush();
        if (!*stream_) throw Error("write failed");
    }

private:
    std::unique_ptr<std::ofstream> file_;
    std::ostream* stream_ = nullptr;
};

class Source {
public:
    Source(const std::string& path, std::istream& fallback) {
        if (path.empty() || path == "-") {
            stream_ = &fallback;
        } else {
            file_ = std::make_unique<std::ifstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open '" + path + "'");
            stream_ = file_.get();
        }
    }

    std::istream& operator*() { return *stream_; }

private:
    std::unique_ptr<std::ifstream> file_;
    std::istream* stream_ = nullptr;
};

PointFormat resolve_format(const std::string& format, const std::string& path) {
    if (format == "csv") return PointFormat::csv;
    if (format == "jsonl") return PointFormat::jsonl;
    const auto ext = std::filesystem::path(path).extension().string();
    return ext == ".jsonl" || ext == ".ndjson" ? PointFormat::jsonl : PointFormat::csv;
}

std::vector<std::size_t> load_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open labels file '" + path + "'");
    std::vector<std::size_t> labels;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        std::istringstream ls(line);
        long long v = 0;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!(ls >> v) || v < 0) throw ParseError("invalid label", n);
        labels.push_back(static_cast<std::size_t>(v));
    }
    return labels;
}

std::vector<FeatureVector> normalize_all(std::vector<FeatureVector> X, const NormalizerState& norm) {
    for (auto& x : X) x = normalize(x, norm);
    return X;
}

void check_normalize_flag(const std::string& mode) {
    if (mode != "none" && mode != "minmax") throw UsageError("--normalize must be none or minmax");
}

json report_json(const EvalReport& r) {
    json j;
    j["pc"] = r.pc;
    j["modified_pc"] = r.modified_pc;
    j["crisp_labels"] = r.crisp_labels;
    if (r.prototype_match_error) j["prototype_match_error"] = *r.prototype_match_error;
    if (r.accuracy) j["accuracy"] = *r.accuracy;
    return j;
}

void write_matrix_csv(std::ostream& out, const PartitionMatrix& U) { write_points_csv(out, U); }

// ---------------------------------------------------------------------------
// fit

int cmd_fit(const Common& c, const BatchArgs& a, std::istream& in, std::ostream& out) {
    check_normalize_flag(c.normalize);
    if (a.poss_form != "derived" && a.poss_form != "printed")
        throw UsageError("--poss-form must be derived or printed");
    std::vector<FeatureVector> X;
    {
        Source src(c.input, in);
        X = read_points(*src, resolve_format(c.format, c.input));
    }
    if (X.empty()) throw InvalidInput("empty input");
    std::optional<NormalizerState> norm;
    if (c.normalize == "minmax") {
        norm = NormalizerState::fit(X);
        X = normalize_all(std::move(X), *norm);
    }

    BatchConfig config;
    config.fuzzifier = a.beta;
    config.tol = a.tol;
    config.max_iter = a.max_iter;
    config.seed = c.seed;

    BatchModel bm;
    bm.method = a.method;
    bm.beta = a.beta;
    bm.alpha = a.alpha;
    PartitionMatrix U;
    std::vector<double> history;
    std::size_t iterations = 0;
    bool converged = false;
    double report_alpha = 1.0;

    if (a.method == "fcm") {
        auto fit = fcm_fit(X, a.m, config);
        bm.model = fit.model;
        U = std::move(fit.memberships);
        history = std::move(fit.objective_history);
        iterations = fit.iterations;
        converged = fit.converged;
    } else if (a.method == "vf") {
        const BlendParam alpha(a.alpha);
        auto fit = vf_fit(X, a.m, alpha, config);
        bm.model = fit.model;
        U = std::move(fit.memberships);
        history = std::move(fit.objective_history);
        iterations = fit.iterations;
        converged = fit.converged;
        report_alpha = a.alpha;
    } else {
        const BlendParam alpha(a.alpha);
        const auto form =
            a.poss_form == "printed" ? PossMembershipForm::printed : PossMembershipForm::derived;
        auto fit = poss_fit(X, a.m, alpha, config, form);
        bm.model = fit.poss.model;
        bm.mu = fit.poss.mu;
        U = std::move(fit.memberships);
        history = std::move(fit.objective_history);
        iterations = fit.iterations;
        converged = fit.converged;
        report_alpha = a.alpha;
    }

    if (!c.output.empty()) {
        Sink sink(c.output, out);
        write_matrix_csv(*sink, U);
        sink.finish();
    }
    if (!c.model_out.empty()) {
        ModelSnapshot snap;
        snap.kind = "batch";
        snap.seed = c.seed;
        snap.normalizer = norm;
        snap.batch = bm;
        save_model(snap, c.model_out);
    }

    // possibilistic rows do not sum to one; PC is still reported as computed
    auto report = evaluate_partition(U, report_alpha);
    if (!c.labels.empty()) report.accuracy = matched_accuracy(report.crisp_labels, load_labels(c.labels));
    json j = report_json(report);
    j["method"] = a.method;
    j["m"] = a.m;
    j["iterations"] = iterations;
    j["converged"] = converged;
    j["objective_history"] = history;
    j["prototypes"] = bm.model.prototypes;
    if (!bm.mu.empty()) j["mu"] = bm.mu;
    Sink sink(c.report, out);
    *sink << j.dump(2) << '\n';
    sink.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// stream / ensemble

struct PlotSinks {
    std::ofstream prototypes;
    std::ofstream pc;
    std::ofstream winners;
};

std::unique_ptr<PlotSinks> open_plots(const std::string& dir, std::size_t dim) {
    if (dir.empty()) return nullptr;
    std::filesystem::create_directories(dir);
    auto p = std::make_unique<PlotSinks>();
    const auto base = std::filesystem::path(dir);
    p->prototypes.open(base / "prototypes.csv", std::ios::binary);
    p->pc.open(base / "pc.csv", std::ios::binary);
    p->winners.open(base / "winners.csv", std::ios::binary);
    if (!p->prototypes || !p->pc || !p->winners)
        throw Error("cannot create plot files in '" + dir + "'");
    write_trajectory_header(p->prototypes, dim);
    p->pc << "step,member,alpha,pc\n";
    p->winners << "step,winner,alpha\n";
    return p;
}

int run_online(const std::string& kind, const Common& c, const OnlineArgs& a,
               std::istream& in, std::ostream& out, std::ostream& err) {
    check_normalize_flag(c.normalize);
    Source src(c.input, in);
    PointReader reader(*src, resolve_format(c.format, c.input));

    std::optional<NormalizerState> norm;
    EnsembleState state;
    std::vector<FeatureVector> pending;

    if (!c.model_in.empty()) {
        auto snap = load_model(c.model_in);
        if (!snap.ensemble) throw InvalidInput("model '" + c.model_in + "' holds no online state");
        state = std::move(*snap.ensemble);
        state.parallel = a.parallel;
        norm = snap.normalizer;
    } else {
        EnsembleConfig config;
        if (kind == "fsom") {
            config.alpha_grid = {BlendParam(a.alpha)};
        } else if (!a.alphas.empty()) {
            config.alpha_grid.clear();
            for (double v : a.alphas) config.alpha_grid.emplace_back(v);
        }
        config.m = a.m;
        config.mode = a.mode == "poss" ? Mode::possibilistic : Mode::probabilistic;
        config.schedule.kind =
            a.schedule == "constant" ? ScheduleKind::constant : ScheduleKind::harmonic;
        config.schedule.eta0 = a.eta0;
        config.schedule.tau = a.tau;
        config.seed = c.seed;
        config.poss.spawn_threshold = a.spawn_threshold;
        config.poss.m_max = a.m_max;
        config.pc_window = a.pc_window;
        config.parallel = a.parallel;
        config.validate();

        const std::size_t warm = a.warmup != 0 ? a.warmup : std::max<std::size_t>(10 * a.m, 50);
        while (pending.size() < warm) {
            auto x = reader.next();
            if (!x) break;
            pending.push_back(std::move(*x));
        }
        if (pending.empty()) throw InvalidInput("empty input");
        if (c.normalize == "minmax") norm = NormalizerState::fit(pending);
        const auto seeds = norm ? normalize_all(pending, *norm) : pending;
        state = ensemble_init(config, seeds);
    }

    const std::size_t q = state.size();
    const std::size_t dim = state.members.front().model.dim;
    Sink results(c.output, out);
    auto plots = open_plots(a.emit_plots, dim);
    std::vector<std::size_t> truth;
    if (!c.labels.empty()) truth = load_labels(c.labels);
    std::vector<FeatureVector> seen;

    std::vector<std::size_t> winner_counts(q, 0);
    std::vector<std::size_t> winners;
    std::size_t spawns = 0;
    std::size_t processed = 0;

    auto process = [&](FeatureVector raw) {
        FeatureVector x;
        if (norm) {
            norm->observe(raw);
            x = normalize(raw, *norm);
        } else {
            x = std::move(raw);
        }
        if (x.size() != dim) throw DimensionError(dim, x.size());
        auto step = ensemble_step(state, x);
        ++processed;
        const std::uint64_t k = state.members[step.winner_index].k;

        ResultRecord rec;
        rec.k = k;
        rec.memberships = step.winner_memberships;
        rec.winner_alpha = step.winner_alpha.value();
        rec.pc.reserve(q);
        for (const auto& m : step.per_member) {
            rec.pc.push_back(m.pc);
            if (m.step.spawned) ++spawns;
        }
        rec.spawn = step.per_member[step.winner_index].step.spawned;
        write_result(*results, rec);

        ++winner_counts[step.winner_index];
        winners.push_back(step.winner_index);
        if (plots) {
            for (std::size_t p = 0; p < q; ++p) {
                write_trajectory_rows(plots->prototypes, k, p, state.members[p].model);
                plots->pc << k << ',' << p << ',' << format_double(state.members[p].alpha.value())
                          << ',' << format_double(step.per_member[p].pc) << '\n';
            }
            plots->winners << k << ',' << step.winner_index << ','
                           << format_double(step.winner_alpha.value()) << '\n';
        }
        if (!truth.empty()) seen.push_back(std::move(x));
    };

    for (auto& x : pending) process(std::move(x));
    pending.clear();
    while (auto x = reader.next()) process(std::move(*x));
    if (processed == 0) throw InvalidInput("empty input");
    results.finish();

    std::vector<double> final_pc(q);
    std::vector<BlendParam> alphas(q);
    for (std::size_t p = 0; p < q; ++p) {
        final_pc[p] = state.pcs[p].mean;
        alphas[p] = state.members[p].alpha;
    }
    const std::size_t final_winner = select_winner(final_pc, alphas);

    json summary;
    summary["kind"] = kind;
    summary["points"] = processed;
    std::vector<double> alpha_values;
    for (auto al : alphas) alpha_values.push_back(al.value());
    summary["alphas"] = alpha_values;
    summary["winner_counts"] = winner_counts;
    summary["final_pc"] = final_pc;
    summary["final_winner_index"] = final_winner;
    summary["final_winner_alpha"] = alphas[final_winner].value();
    std::vector<std::size_t> m_final;
    for (const auto& s : state.members) m_final.push_back(s.model.m());
    summary["m"] = m_final;
    summary["spawns"] = spawns;

    // Settled band: the range of winning alphas over the second half of the stream.
    const std::size_t from = winners.size() / 2;
    double lo = 1.0, hi = 0.0;
    std::vector<double> band_alphas;
    for (std::size_t t = from; t < winners.size(); ++t) {
        const double v = alphas[winners[t]].value();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (std::find(band_alphas.begin(), band_alphas.end(), v) == band_alphas.end())
            band_alphas.push_back(v);
    }
    std::sort(band_alphas.begin(), band_alphas.end());
    summary["band"] = {{"from_step", from + 1}, {"lo", lo}, {"hi", hi}, {"alphas", band_alphas}};

    if (!truth.empty()) {
        if (truth.size() != seen.size())
            throw InvalidInput("labels file has " + std::to_string(truth.size()) +
                               " entries for " + std::to_string(seen.size()) + " points");
        std::vector<std::size_t> predicted;
        predicted.reserve(seen.size());
        for (const auto& x : seen)
            predicted.push_back(crisp_label(fsom_memberships(state.members[final_winner], x)));
        summary["accuracy"] = matched_accuracy(predicted, truth);
    }

    if (!c.model_out.empty()) {
        ModelSnapshot snap;
        snap.kind = kind;
        snap.seed = c.seed;
        snap.normalizer = norm;
        snap.ensemble = state;
        save_model(snap, c.model_out);
    }
    if (plots) {
        plots->prototypes.flush();
        plots->pc.flush();
        plots->winners.flush();
        if (!plots->prototypes || !plots->pc || !plots->winners)
            throw Error("failed writing plot files");
    }
    Sink report(c.report, err);
    *report << summary.dump(2) << '\n';
    report.finish();
    return 0;
}

// ---------------------------------------------------------------------------
// gen

std::vector<FeatureVector> parse_means(const std::string& text) {
    std::vector<FeatureVector> means;
    std::stringstream blobs(text);
    std::string blob;
    while (std::getline(blobs, blob, ';')) {
        FeatureVector mu;
        std::stringstream cells(blob);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                mu.push_back(std::stod(cell, &used));
                if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw UsageError("invalid --means entry '" + cell + "'");
            }
        }
        means.push_back(std::move(mu));
    }
    return means;
}

// Blob centres drawn uniformly in a box, at least `separation` stddevs apart.
std::vector<FeatureVector> random_means(std::size_t m, std::size_t dim, double stddev,
                                        double separation, std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const double side = std::max(1.0, separation * stddev * static_cast<double>(m));
    const double min_d2 = separation * stddev * separation * stddev;
    std::vector<FeatureVector> means;
    for (int attempt = 0; means.size() < m; ++attempt) {
        if (attempt > 100000) throw ConfigError("could not place separated blob means");
        FeatureVector mu(dim);
        for (double& v : mu) v = rng.uniform() * side;
        bool ok = true;
        for (const auto& other : means)
            if (distance_sq(mu, other) < min_d2) ok = false;
        if (ok) means.push_back(std::move(mu));
    }
    return means;
}

int cmd_gen(const Common& c, const GenArgs& a, std::ostream& out) {
    SyntheticSpec spec;
    if (a.preset == "knowledge") {
        spec = knowledge_like_spec(c.seed);
    } else {
        spec.means = a.means.empty() ? random_means(a.m, a.dim, a.stddev, a.separation, c.seed)
                                     : parse_means(a.means);
        spec.stddevs.assign(spec.means.size(), a.stddev);
        spec.weights = a.weights.empty() ? std::vector<double>(spec.means.size(), 1.0) : a.weights;
        spec.count = a.count;
        spec.seed = c.seed;
    }
    auto data = gen_synthetic(spec);

    Sink sink(c.output, out);
    if (resolve_format(c.format, c.output) == PointFormat::jsonl) {
        for (const auto& x : data.points) *sink << json{{"x", x}}.dump() << '\n';
    } else {
        write_points_csv(*sink, data.points);
    }
    sink.finish();
    if (!a.labels_out.empty()) {
        std::ofstream labels(a.labels_out, std::ios::binary);
        if (!labels) throw Error("cannot open '" + a.labels_out + "' for writing");
        for (auto l : data.labels) labels << l << '\n';
        if (!labels) throw Error("failed writing labels");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct LoadedModel {
    ModelSnapshot snap;
    ClusterModel model;
    double alpha = 1.0;
    std::size_t member = 0;
};

LoadedModel load_for_eval(const std::string& path) {
    LoadedModel lm;
    lm.snap = load_model(path);
    if (lm.snap.batch) {
        lm.model = lm.snap.batch->model;
        lm.alpha = lm.snap.batch->method == "fcm" ? 1.0 : lm.snap.batch->alpha;
    } else {
        const auto& ens = *lm.snap.ensemble;
        std::vector<double> pcs;
        std::vector<BlendParam> alphas;
        for (std::size_t p = 0; p < ens.size(); ++p) {
            pcs.push_back(ens.pcs[p].mean);
            alphas.push_back(ens.members[p].alpha);
        }
        const auto w = select_winner(pcs, alphas);
        lm.member = w;
        lm.model = ens.members[w].model;
        lm.alpha = ens.members[w].alpha.value();
    }
    return lm;
}

MembershipRow model_memberships(const LoadedModel& lm, std::span<const double> x) {
    if (x.size() != lm.model.dim) throw DimensionError(lm.model.dim, x.size());
    if (const auto& b = lm.snap.batch) {
        if (b->method == "fcm") return fcm_memberships(x, b->model, b->beta);
        if (b->method == "vf") return vf_memberships(x, b->model, BlendParam(b->alpha));
        return poss_memberships(x, PossModel{b->model, b->mu}, BlendParam(b->alpha));
    }
    return fsom_memberships(lm.snap.ensemble->members[lm.member], x);
}

int cmd_eval(const Common& c, const EvalArgs& a, std::istream& in, std::ostream& out) {
    const bool have_data = !c.input.empty() && c.input != "-";
    if (a.memberships.empty() && c.model_in.empty())
        throw UsageError("eval needs --memberships or --model-in");

    json j;
    std::optional<LoadedModel> model;
    if (!c.model_in.empty()) model = load_for_eval(c.model_in);

    PartitionMatrix U;
    double alpha = a.alpha.value_or(model ? model->alpha : 1.0);
    if (!a.memberships.empty()) {
        Source src(a.memberships, in);
        U = read_points(*src, PointFormat::csv);
        for (const auto& row : U)
            for (double u : row)
                if (u < 0.0 || u > 1.0) throw InvalidInput("membership outside [0, 1]");
    } else if (have_data) {
        Source src(c.input, in);
        auto X = read_points(*src, resolve_format(c.format, c.input));
        if (X.empty()) throw InvalidInput("empty input");
        if (model->snap.normalizer) X = normalize_all(std::move(X), *model->snap.normalizer);
        for (const auto& x : X) U.push_back(model_memberships(*model, x));
    }

    EvalReport report;
    if (!U.empty()) {
        BlendParam checked(alpha);
        report = evaluate_partition(U, checked.value());
        if (!c.labels.empty())
            report.accuracy = matched_accuracy(report.crisp_labels, load_labels(c.labels));
        j = report_json(report);
        j["points"] = U.size();
        j["alpha"] = alpha;
    }
    if (!a.reference.empty()) {
        if (!model) throw UsageError("--reference needs --model-in");
        const auto ref = load_for_eval(a.reference);
        j["prototype_match_error"] = prototype_match_error(model->model, ref.model);
    }
    if (j.is_null()) throw UsageError("nothing to evaluate: give --input, --memberships or --reference");
    Sink sink(c.report.empty() ? c.output : c.report, out);
    *sink << j.dump(2) << '\n';
    sink.finish();
    return 0;
}

// ---------------------------------------------------------------------------

void add_io_flags(CLI::App* sub, Common& c, bool with_input = true) {
    if (with_input) {
        sub->add_option("--input", c.input, "Input points (CSV or JSONL), '-' for stdin");
        sub->add_option("--format", c.format, "Input format")
            ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    }
    sub->add_option("--seed", c.seed, "Random seed");
    sub->add_option("--output", c.output, "Output file, '-' for stdout");
}

void add_online_flags(CLI::App* sub, Common& c, OnlineArgs& a) {
    add_io_flags(sub, c);
    sub->add_option("--mode", a.mode, "prob or poss")->check(CLI::IsMember({"prob", "poss"}));
    sub->add_option("--m", a.m, "Number of clusters")->required();
    sub->add_option("--eta0", a.eta0, "Initial learning rate");
    sub->add_option("--tau", a.tau, "Harmonic schedule time constant");
    sub->add_option("--schedule", a.schedule, "harmonic or constant")
        ->check(CLI::IsMember({"harmonic", "constant"}));
    sub->add_option("--normalize", c.normalize, "none or minmax");
    sub->add_option("--spawn-threshold", a.spawn_threshold, "Possibilistic novelty threshold");
    sub->add_option("--m-max", a.m_max, "Upper bound on clusters in poss mode");
    sub->add_option("--warmup", a.warmup, "Points buffered for initialization (0 = max(10m, 50))");
    sub->add_option("--model-out", c.model_out, "Write final model snapshot");
    sub->add_option("--model-in", c.model_in, "Resume from a model snapshot");
    sub->add_option("--emit-plots", a.emit_plots, "Directory for plot-ready CSV files");
    sub->add_option("--report", c.report, "Summary JSON (default stderr)");
    sub->add_option("--labels", c.labels, "True labels, one per line, for accuracy");
    sub->fallthrough();
}

}  // namespace

int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out,
        std::ostream& err) {
    CLI::App app{"Streaming fuzzy clustering with an ensemble of neuro-fuzzy Kohonen networks",
                 "fuzzens"};
    app.require_subcommand(1);
    // one TOML file for all subcommands: flag names as keys under [fit], [stream], ...
    app.set_config("--config", "", "TOML config file, one [subcommand] section per command");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Common c;
    BatchArgs batch;
    OnlineArgs online;
    GenArgs gen;
    EvalArgs eval;

    auto* fit = app.add_subcommand("fit", "Batch clustering: fcm, vf or poss");
    add_io_flags(fit, c);
    fit->add_option("--method", batch.method, "fcm, vf or poss")
        ->check(CLI::IsMember({"fcm", "vf", "poss"}));
    fit->add_option("--m", batch.m, "Number of clusters")->required();
    fit->add_option("--beta", batch.beta, "Fuzzifier for fcm");
    fit->add_option("--alpha", batch.alpha, "Blend parameter for vf and poss");
    fit->add_option("--tol", batch.tol, "Stop when memberships change less than this");
    fit->add_option("--max-iter", batch.max_iter, "Iteration cap");
    fit->add_option("--normalize", c.normalize, "none or minmax");
    fit->add_option("--model-out", c.model_out, "Write model snapshot");
    fit->add_option("--report", c.report, "Report JSON (default stdout)");
    fit->add_option("--labels", c.labels, "True labels, one per line, for accuracy");
    fit->add_option("--poss-form", batch.poss_form, "derived or printed membership formula");
    fit->fallthrough();

    auto* stream = app.add_subcommand("stream", "Single FSOM over a stream");
    add_online_flags(stream, c, online);
    stream->add_option("--alpha", online.alpha, "Blend parameter");

    auto* ensemble = app.add_subcommand("ensemble", "Ensemble of FSOMs with PC-based selection");
    add_online_flags(ensemble, c, online);
    ensemble->add_option("--alphas", online.alphas, "Ascending alpha grid, comma separated")
        ->delimiter(',');
    ensemble->add_option("--pc-window", online.pc_window, "Score over the last W points (0 = all)");
    ensemble->add_flag("--parallel", online.parallel, "Step members on separate threads");

    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic Gaussian-blob stream");
    add_io_flags(gen_cmd, c, false);
    gen_cmd->add_option("--format", c.format, "Output format")
        ->check(CLI::IsMember({"auto", "csv", "jsonl"}));
    gen_cmd->add_option("--preset", gen.preset, "blobs or knowledge")
        ->check(CLI::IsMember({"blobs", "knowledge"}));
    gen_cmd->add_option("--m", gen.m, "Number of blobs");
    gen_cmd->add_option("--dim", gen.dim, "Dimensionality");
    gen_cmd->add_option("--count", gen.count, "Number of points");
    gen_cmd->add_option("--stddev", gen.stddev, "Blob standard deviation");
    gen_cmd->add_option("--separation", gen.separation, "Minimum centre distance in stddevs");
    gen_cmd->add_option("--weights", gen.weights, "Blob weights, comma separated")->delimiter(',');
    gen_cmd->add_option("--means", gen.means, "Blob means: 'x,y;x,y;...'");
    gen_cmd->add_option("--labels-out", gen.labels_out, "Write true blob labels");
    gen_cmd->fallthrough();

    auto* eval_cmd = app.add_subcommand("eval", "Validity report for a partition or model");
    add_io_flags(eval_cmd, c);
    eval_cmd->add_option("--model-in", c.model_in, "Model snapshot");
    eval_cmd->add_option("--memberships", eval.memberships, "Membership matrix CSV");
    eval_cmd->add_option("--reference", eval.reference, "Second model to compare prototypes with");
    eval_cmd->add_option("--alpha", eval.alpha, "Alpha for the modified PC");
    eval_cmd->add_option("--labels", c.labels, "True labels, one per line");
    eval_cmd->add_option("--report", c.report, "Report JSON (default stdout)");
    eval_cmd->fallthrough();

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        const auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 2;
    }

    try {
        if (fit->parsed()) return cmd_fit(c, batch, in, out);
        if (stream->parsed()) return run_online("fsom", c, online, in, out, err);
        if (ensemble->parsed()) {
            for (std::size_t p = 0; p < online.alphas.size(); ++p) {
                if (!(online.alphas[p] > 0.0 && online.alphas[p] <= 1.0))
                    throw UsageError("--alphas entries must lie in (0, 1]");
                if (p > 0 && !(online.alphas[p - 1] < online.alphas[p]))
                    throw UsageError("--alphas must be strictly ascending");
            }
            return run_online("ensemble", c, online, in, out, err);
        }
        if (gen_cmd->parsed()) return cmd_gen(c, gen, out);
        if (eval_cmd->parsed()) return cmd_eval(c, eval, in, out);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace fuzzens::cli
