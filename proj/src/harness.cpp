#include "qbic/harness.hpp"

#include "qbic/parallel.hpp"
#include "qbic/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace qbic {

namespace {

constexpr std::uint64_t kOptimizerStream = 0x6f7074696d697a65ULL;
constexpr const char* kTwoStepPrefix = "TWO_STEP_";

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') cell.pop_back();
        out.push_back(cell);
    }
    return out;
}

template <class T>
std::size_t index_in(const std::vector<T>& v, const T& x, const char* what) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == x) return i;
    }
    std::ostringstream os;
    os << "unknown " << what << " '" << x << "'";
    throw SpecificationError(os.str());
}

struct Welford {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double d = x - mean;
        mean += d / static_cast<double>(count);
        m2 += d * (x - mean);
    }
    [[nodiscard]] double sd() const { return count > 1 ? std::sqrt(m2 / static_cast<double>(count - 1)) : 0.0; }
};

struct ReplicationOutcome {
    std::vector<long> chosen;  // per selector; -1 when excluded
    std::vector<std::optional<Vector>> estimates;
    long blowups = 0;
    long non_convergences = 0;
};

ReplicationOutcome run_replication(const ExperimentConfig& cfg, const ScenarioSpec& spec,
                                   const std::vector<Selector>& selectors, std::size_t n, std::size_t rep) {
    ReplicationOutcome out;
    out.chosen.assign(selectors.size(), -1);
    out.estimates.resize(spec.family.size());

    std::optional<Observations> data;
    for (int attempt = 0; attempt <= cfg.max_blowup_retries && !data; ++attempt) {
        try {
            data = spec.generate(n, stream_seed(cfg.master_seed, {n, rep, static_cast<std::uint64_t>(attempt)}),
                                 cfg.substeps);
        } catch (const SimulationBlowup&) {
            ++out.blowups;
        }
    }
    if (!data) throw Error("replication " + std::to_string(rep) + " at n=" + std::to_string(n) + " blew up on every attempt");

    OptimizerConfig opt = cfg.optimizer;
    opt.seed = stream_seed(cfg.master_seed, {n, rep, kOptimizerStream});

    auto candidate_index = [&](const std::string& id) { return static_cast<long>(spec.index_of(id)); };

    bool joint_done = false;
    for (std::size_t s = 0; s < selectors.size(); ++s) {
        const Selector& sel = selectors[s];
        if (sel.strategy != FitStrategy::Joint || joint_done) continue;
        joint_done = true;
        std::optional<SelectionOutcome> o;
        try {
            o = joint_select(*data, spec.family, sel.criterion, opt);
        } catch (const SelectionError&) {
            out.non_convergences += static_cast<long>(spec.family.size());
            break;
        }
        for (std::size_t k = 0; k < o->fits.size(); ++k) {
            if (o->fits[k].converged) {
                out.estimates[k] = o->fits[k].theta_hat;
            } else {
                ++out.non_convergences;
            }
        }
        for (std::size_t t = 0; t < selectors.size(); ++t) {
            if (selectors[t].strategy != FitStrategy::Joint) continue;
            try {
                out.chosen[t] = candidate_index(o->report.chosen(selectors[t].criterion));
            } catch (const SelectionError&) {
            }
        }
    }
    for (std::size_t s = 0; s < selectors.size(); ++s) {
        if (selectors[s].strategy != FitStrategy::TwoStep) continue;
        try {
            const auto o = two_step_select(*data, *spec.decomposed, selectors[s].criterion, opt);
            for (const auto& f : o.fits) out.non_convergences += f.converged ? 0 : 1;
            out.chosen[s] = candidate_index(o.chosen);
        } catch (const SelectionError&) {
            ++out.non_convergences;
        }
    }
    return out;
}

}  // namespace

std::string Selector::name() const {
    return strategy == FitStrategy::Joint ? to_string(criterion) : kTwoStepPrefix + to_string(criterion);
}

Selector Selector::parse(std::string_view name) {
    const std::string_view prefix = kTwoStepPrefix;
    if (name.substr(0, prefix.size()) == prefix) return {FitStrategy::TwoStep, parse_criterion(name.substr(prefix.size()))};
    return {FitStrategy::Joint, parse_criterion(name)};
}

void ExperimentConfig::validate() const {
    if (n_values.empty()) throw ConfigError("n_values", "at least one sample size is required");
    for (auto n : n_values) {
        if (n < 2) throw ConfigError("n_values", "sample sizes must be >= 2");
    }
    if (replications < 1) throw ConfigError("replications", "must be >= 1");
    if (criteria.empty()) throw ConfigError("criteria", "at least one criterion is required");
    if (strategies.empty()) throw ConfigError("strategies", "at least one strategy is required");
    if (workers < 1) throw ConfigError("workers", "must be >= 1");
    if (substeps < 1) throw ConfigError("substeps", "must be >= 1");
    if (!(box_halfwidth > 0.0)) throw ConfigError("box_halfwidth", "must be > 0");
    if (scenario == Scenario::Custom && !custom) throw ConfigError("scenario", "CUSTOM requires a scenario definition");
    try {
        optimizer.validate();
    } catch (const SpecificationError& e) {
        throw ConfigError("optimizer", e.what());
    }
    for (auto s : strategies) {
        if (s == FitStrategy::TwoStep && scenario_spec().kind != FamilyKind::ErgodicDiffusion) {
            throw ConfigError("strategies", "TWO_STEP needs an ergodic-diffusion family");
        }
    }
}

ScenarioSpec ExperimentConfig::scenario_spec() const {
    if (scenario == Scenario::Custom) {
        if (!custom) throw ConfigError("scenario", "CUSTOM requires a scenario definition");
        return *custom;
    }
    return make_scenario(scenario, level, box_halfwidth);
}

std::vector<Selector> ExperimentConfig::selectors() const {
    std::vector<Selector> out;
    for (auto s : strategies) {
        for (auto c : criteria) out.push_back({s, c});
    }
    return out;
}

void FrequencyTable::resize() {
    counts.assign(selectors.size(),
                  std::vector<std::vector<long>>(n_values.size(), std::vector<long>(candidates.size(), 0)));
    excluded.assign(selectors.size(), std::vector<long>(n_values.size(), 0));
    blowups.assign(n_values.size(), 0);
    non_convergences.assign(n_values.size(), 0);
}

long FrequencyTable::count(const std::string& selector, std::size_t n, const std::string& candidate) const {
    return counts[index_in(selectors, selector, "selector")][index_in(n_values, n, "sample size")]
                 [index_in(candidates, candidate, "candidate")];
}

double FrequencyTable::frequency(const std::string& selector, std::size_t n, const std::string& candidate) const {
    return static_cast<double>(count(selector, n, candidate)) / static_cast<double>(replications);
}

double FrequencyTable::frequency(const std::string& selector, std::size_t n,
                                 const std::vector<std::string>& cands) const {
    double s = 0.0;
    for (const auto& c : cands) s += frequency(selector, n, c);
    return s;
}

const EstimatorCell& EstimatorSummary::at(const std::string& candidate, std::size_t n, int coordinate) const {
    for (const auto& c : cells) {
        if (c.candidate == candidate && c.n == n && c.coordinate == coordinate) return c;
    }
    throw SpecificationError("no estimator summary for " + candidate + " at n=" + std::to_string(n));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress) {
    cfg.validate();
    const ScenarioSpec spec = cfg.scenario_spec();
    const auto selectors = cfg.selectors();

    ExperimentResult res;
    res.scenario_name = spec.name;
    res.true_model_id = spec.true_model_id;
    res.supermodel_ids = spec.supermodel_ids;
    FrequencyTable& t = res.freq;
    for (const auto& s : selectors) t.selectors.push_back(s.name());
    t.n_values = cfg.n_values;
    for (const auto& m : spec.family) t.candidates.push_back(m.id);
    t.replications = cfg.replications;
    t.resize();

    const bool joint = std::find(cfg.strategies.begin(), cfg.strategies.end(), FitStrategy::Joint) != cfg.strategies.end();
    const auto reps = static_cast<std::size_t>(cfg.replications);

    for (std::size_t ni = 0; ni < cfg.n_values.size(); ++ni) {
        const std::size_t n = cfg.n_values[ni];
        std::vector<ReplicationOutcome> outcomes(reps);
        parallel_for(reps, cfg.workers,
                     [&](std::size_t r) { outcomes[r] = run_replication(cfg, spec, selectors, n, r); });

        std::vector<std::vector<Welford>> stats(spec.family.size());
        for (std::size_t k = 0; k < spec.family.size(); ++k) stats[k].resize(static_cast<std::size_t>(spec.family[k].dim()));
        for (const auto& o : outcomes) {
            t.blowups[ni] += o.blowups;
            t.non_convergences[ni] += o.non_convergences;
            for (std::size_t s = 0; s < selectors.size(); ++s) {
                if (o.chosen[s] < 0) {
                    ++t.excluded[s][ni];
                } else {
                    ++t.counts[s][ni][static_cast<std::size_t>(o.chosen[s])];
                }
            }
            for (std::size_t k = 0; k < o.estimates.size(); ++k) {
                if (!o.estimates[k]) continue;
                for (Eigen::Index c = 0; c < o.estimates[k]->size(); ++c) stats[k][static_cast<std::size_t>(c)].add((*o.estimates[k])[c]);
            }
        }
        if (joint) {
            for (std::size_t k = 0; k < spec.family.size(); ++k) {
                for (std::size_t c = 0; c < stats[k].size(); ++c) {
                    res.est.cells.push_back(
                        {spec.family[k].id, n, static_cast<int>(c), stats[k][c].count, stats[k][c].mean, stats[k][c].sd()});
                }
            }
        }
        if (progress) {
            progress(spec.name + ": n=" + std::to_string(n) + " done (" + std::to_string(reps) + " replications, " +
                     std::to_string(t.blowups[ni]) + " blowups, " + std::to_string(t.non_convergences[ni]) +
                     " non-converged fits)");
        }
    }
    return res;
}

std::string frequency_csv(const FrequencyTable& t, const std::optional<std::string>& selector) {
    std::ostringstream os;
    os << "selector,n,replications,excluded,blowups,non_convergences";
    for (const auto& c : t.candidates) os << ',' << c;
    os << '\n';
    for (std::size_t s = 0; s < t.selectors.size(); ++s) {
        if (selector && t.selectors[s] != *selector) continue;
        for (std::size_t ni = 0; ni < t.n_values.size(); ++ni) {
            os << t.selectors[s] << ',' << t.n_values[ni] << ',' << t.replications << ',' << t.excluded[s][ni] << ','
               << t.blowups[ni] << ',' << t.non_convergences[ni];
            for (long c : t.counts[s][ni]) os << ',' << c;
            os << '\n';
        }
    }
    return os.str();
}

FrequencyTable parse_frequency_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) throw SpecificationError("frequency CSV is empty");
    const auto header = split_csv(line);
    if (header.size() < 6 || header[0] != "selector") throw SpecificationError("frequency CSV: bad header");
    FrequencyTable t;
    t.candidates.assign(header.begin() + 6, header.end());

    struct Row {
        std::string sel;
        std::size_t n;
        long excluded, blowups, nonconv;
        std::vector<long> counts;
    };
    std::vector<Row> rows;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw SpecificationError("frequency CSV line " + std::to_string(lineno) + ": wrong column count");
        }
        try {
            Row r{cells[0], std::stoul(cells[1]), std::stol(cells[3]), std::stol(cells[4]), std::stol(cells[5]), {}};
            t.replications = std::stoi(cells[2]);
            for (std::size_t k = 6; k < cells.size(); ++k) r.counts.push_back(std::stol(cells[k]));
            rows.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw SpecificationError("frequency CSV line " + std::to_string(lineno) + ": bad number");
        }
    }
    for (const auto& r : rows) {
        if (std::find(t.selectors.begin(), t.selectors.end(), r.sel) == t.selectors.end()) t.selectors.push_back(r.sel);
        if (std::find(t.n_values.begin(), t.n_values.end(), r.n) == t.n_values.end()) t.n_values.push_back(r.n);
    }
    t.resize();
    for (const auto& r : rows) {
        const auto s = index_in(t.selectors, r.sel, "selector");
        const auto ni = index_in(t.n_values, r.n, "sample size");
        t.counts[s][ni] = r.counts;
        t.excluded[s][ni] = r.excluded;
        t.blowups[ni] = r.blowups;
        t.non_convergences[ni] = r.nonconv;
    }
    return t;
}

std::string estimator_csv(const EstimatorSummary& s) {
    std::ostringstream os;
    os << "candidate,n,coordinate,count,mean,sd\n";
    for (const auto& c : s.cells) {
        os << c.candidate << ',' << c.n << ',' << c.coordinate << ',' << c.count << ',' << num(c.mean) << ','
           << num(c.sd) << '\n';
    }
    return os.str();
}

EstimatorSummary parse_estimator_csv(const std::string& text) {
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line) || split_csv(line).size() != 6) throw SpecificationError("estimator CSV: bad header");
    EstimatorSummary s;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = split_csv(line);
        if (c.size() != 6) throw SpecificationError("estimator CSV line " + std::to_string(lineno) + ": wrong column count");
        try {
            s.cells.push_back({c[0], std::stoul(c[1]), std::stoi(c[2]), std::stol(c[3]), std::stod(c[4]), std::stod(c[5])});
        } catch (const std::logic_error&) {
            throw SpecificationError("estimator CSV line " + std::to_string(lineno) + ": bad number");
        }
    }
    return s;
}

std::string frequency_text(const FrequencyTable& t) {
    std::size_t w = 6;
    for (const auto& c : t.candidates) w = std::max(w, c.size() + 1);
    std::size_t sw = 9;
    for (const auto& s : t.selectors) sw = std::max(sw, s.size() + 1);
    std::ostringstream os;
    for (std::size_t ni = 0; ni < t.n_values.size(); ++ni) {
        os << "n=" << t.n_values[ni] << "  (replications " << t.replications << ", blowups " << t.blowups[ni]
           << ", non-converged fits " << t.non_convergences[ni] << ")\n";
        os << std::left << std::setw(static_cast<int>(sw)) << "criterion" << std::right;
        for (const auto& c : t.candidates) os << std::setw(static_cast<int>(w)) << c;
        os << std::setw(10) << "excluded" << '\n';
        for (std::size_t s = 0; s < t.selectors.size(); ++s) {
            os << std::left << std::setw(static_cast<int>(sw)) << t.selectors[s] << std::right;
            for (long c : t.counts[s][ni]) os << std::setw(static_cast<int>(w)) << c;
            os << std::setw(10) << t.excluded[s][ni] << '\n';
        }
        os << '\n';
    }
    return os.str();
}

std::string estimator_text(const EstimatorSummary& s) {
    std::ostringstream os;
    os << std::left << std::setw(14) << "candidate" << std::right << std::setw(8) << "n" << std::setw(7) << "coord"
       << std::setw(8) << "count" << std::setw(12) << "mean" << std::setw(12) << "sd" << '\n';
    for (const auto& c : s.cells) {
        os << std::left << std::setw(14) << c.candidate << std::right << std::setw(8) << c.n << std::setw(7)
           << c.coordinate << std::setw(8) << c.count << std::fixed << std::setprecision(4) << std::setw(12) << c.mean
           << std::setw(12) << c.sd << std::defaultfloat << '\n';
    }
    return os.str();
}

Summary summarize(const FrequencyTable& freq, const EstimatorSummary& est) {
    Summary s;
    s.frequency_csv = frequency_csv(freq);
    s.estimator_csv = estimator_csv(est);
    s.text = frequency_text(freq) + estimator_text(est);
    return s;
}

std::vector<std::filesystem::path> write_experiment_tables(const std::filesystem::path& dir,
                                                           const ExperimentResult& result) {
    std::filesystem::create_directories(dir);
    std::vector<std::filesystem::path> out;
    auto write = [&](const std::filesystem::path& p, const std::string& body) {
        std::ofstream f(p, std::ios::binary);
        if (!f) throw Error("cannot write " + p.string());
        f << body;
        if (!f) throw Error("failed writing " + p.string());
        out.push_back(p);
    };
    for (const auto& sel : result.freq.selectors) {
        write(dir / ("freq_" + result.scenario_name + "_" + sel + ".csv"), frequency_csv(result.freq, sel));
    }
    write(dir / ("est_" + result.scenario_name + ".csv"), estimator_csv(result.est));
    return out;
}

}  // namespace qbic
