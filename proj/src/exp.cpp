#include "corridor/exp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "corridor/controllers.hpp"
#include "corridor/csv.hpp"
#include "corridor/svg.hpp"

namespace corridor {

StabilityVerdict stability_verdict(std::span<const std::pair<double, double>> series, double duration_s,
                                   const StabilityCriteria &criteria) {
    if (series.size() < 2) throw std::invalid_argument("stability verdict needs at least 2 backup samples");
    const double from = duration_s / 2.0;
    double n = 0.0, sx = 0.0, sy = 0.0;
    for (const auto &[t, y] : series)
        if (t >= from - 1e-9 && t <= duration_s + 1e-9) {
            n += 1.0;
            sx += t;
            sy += y;
        }
    if (n < 2.0) throw std::invalid_argument("fewer than 2 backup samples in the second half of the run");
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto &[t, y] : series)
        if (t >= from - 1e-9 && t <= duration_s + 1e-9) {
            sxx += (t - mx) * (t - mx);
            sxy += (t - mx) * (y - my);
        }
    StabilityVerdict v;
    v.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    v.final_backup = series.back().second;
    v.stable = v.slope <= criteria.max_slope_veh_per_s && v.final_backup <= criteria.max_final_backup;
    return v;
}

ControllerSpec load_controller_spec(ArchitectureKind kind, const std::optional<std::string> &checkpoint_path) {
    ControllerSpec spec;
    spec.kind = kind;
    if (kind == ArchitectureKind::MaxPressure) return spec;
    if (!checkpoint_path) throw ConfigError(to_string(kind) + " needs --checkpoint");
    PolicyCheckpoint c = load_checkpoint(*checkpoint_path);
    if (c.policy.kind != kind)
        throw ConfigError("checkpoint " + *checkpoint_path + " holds a " + to_string(c.policy.kind) + " policy, not " +
                          to_string(kind));
    spec.policy = std::move(c.policy);
    return spec;
}

namespace {

class OwningPolicyController : public Controller {
  public:
    explicit OwningPolicyController(PolicySet policy)
        : policy_(std::move(policy)), inner_(policy_, PolicyController::Mode::Deterministic) {}
    OwningPolicyController(const OwningPolicyController &) = delete;
    OwningPolicyController &operator=(const OwningPolicyController &) = delete;

    std::string name() const override { return inner_.name(); }
    std::vector<ControlDecision> decide(const SimState &state) override { return inner_.decide(state); }
    void finish(const SimState &state) override { inner_.finish(state); }

  private:
    PolicySet policy_;
    PolicyController inner_;
};

} // namespace

std::unique_ptr<Controller> make_controller(const ControllerSpec &spec, std::size_t n) {
    if (spec.kind == ArchitectureKind::MaxPressure) return std::make_unique<MaxPressureController>();
    if (!spec.policy) throw ConfigError(to_string(spec.kind) + " controller has no policy");
    return std::make_unique<OwningPolicyController>(retarget(*spec.policy, n));
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)> &fn) {
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto &th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

bool majority_stable(std::span<const SeedVerdict> seeds) {
    if (seeds.empty()) throw std::invalid_argument("majority vote over zero seeds");
    const auto stable = std::count_if(seeds.begin(), seeds.end(), [](const SeedVerdict &s) { return s.verdict.stable; });
    return 2 * static_cast<std::size_t>(stable) >= seeds.size();
}

std::vector<double> default_demand_grid() {
    std::vector<double> g;
    for (int x = 100; x <= 1500; x += 100) g.push_back(x);
    return g;
}

std::vector<CapacityVerdict> capacity_sweep(const CapacitySweepConfig &cfg, const ControllerSpec &controller) {
    if (cfg.ns_grid.empty() || cfg.we_grid.empty()) throw ConfigError("capacity sweep grid is empty");
    if (cfg.seeds.empty()) throw ConfigError("capacity sweep needs at least one seed");
    cfg.sim.validate();
    const CorridorNetwork net(cfg.corridor);
    make_controller(controller, net.junction_count());

    std::vector<CapacityVerdict> out;
    for (double ns : cfg.ns_grid)
        for (double we : cfg.we_grid) {
            CapacityVerdict v;
            v.lambda_ns = ns;
            v.lambda_we = we;
            v.seeds.resize(cfg.seeds.size());
            out.push_back(std::move(v));
        }
    const std::size_t per_point = cfg.seeds.size();
    parallel_for(out.size() * per_point, cfg.threads, [&](std::size_t job) {
        CapacityVerdict &v = out[job / per_point];
        const std::uint64_t seed = cfg.seeds[job % per_point];
        SimConfig sim = cfg.sim;
        sim.seed = seed;
        const DemandConfig demand{v.lambda_we, v.lambda_we, v.lambda_ns, v.lambda_ns};
        auto ctl = make_controller(controller, net.junction_count());
        const SimResult r = run(net, demand, sim, *ctl);
        v.seeds[job % per_point] = {seed, stability_verdict(r.backup_totals(), sim.duration_s, cfg.criteria)};
    });
    for (auto &v : out) v.stable = majority_stable(v.seeds);
    std::sort(out.begin(), out.end(), [](const CapacityVerdict &a, const CapacityVerdict &b) {
        return std::pair(a.lambda_ns, a.lambda_we) < std::pair(b.lambda_ns, b.lambda_we);
    });
    return out;
}

std::vector<std::string> downward_closure_warnings(const std::vector<CapacityVerdict> &verdicts) {
    std::map<std::pair<double, double>, bool> stable;
    std::vector<double> ns_values, we_values;
    for (const auto &v : verdicts) {
        stable[{v.lambda_ns, v.lambda_we}] = v.stable;
        ns_values.push_back(v.lambda_ns);
        we_values.push_back(v.lambda_we);
    }
    const auto lower = [](std::vector<double> values, double x) -> std::optional<double> {
        std::sort(values.begin(), values.end());
        auto it = std::lower_bound(values.begin(), values.end(), x);
        if (it == values.begin()) return std::nullopt;
        return *std::prev(it);
    };
    std::vector<std::string> warnings;
    for (const auto &v : verdicts) {
        if (!v.stable) continue;
        const auto check = [&](double ns, double we) {
            auto it = stable.find({ns, we});
            if (it != stable.end() && !it->second)
                warnings.push_back("stable at (ns=" + format_double(v.lambda_ns) + ", we=" + format_double(v.lambda_we) +
                                   ") but unstable at (ns=" + format_double(ns) + ", we=" + format_double(we) + ")");
        };
        if (auto ns = lower(ns_values, v.lambda_ns)) check(*ns, v.lambda_we);
        if (auto we = lower(we_values, v.lambda_we)) check(v.lambda_ns, *we);
    }
    return warnings;
}

namespace {

double max_stable_along(const std::vector<CapacityVerdict> &verdicts, double fixed, bool vary_we) {
    std::vector<std::pair<double, bool>> line;
    for (const auto &v : verdicts)
        if ((vary_we ? v.lambda_ns : v.lambda_we) == fixed) line.push_back({vary_we ? v.lambda_we : v.lambda_ns, v.stable});
    if (line.empty()) throw std::invalid_argument("no grid points at the requested fixed demand " + format_double(fixed));
    std::sort(line.begin(), line.end());
    double best = 0.0;
    for (const auto &[x, ok] : line) {
        if (!ok) break;
        best = x;
    }
    return best;
}

} // namespace

double max_stable_we(const std::vector<CapacityVerdict> &verdicts, double lambda_ns) {
    return max_stable_along(verdicts, lambda_ns, true);
}

double max_stable_ns(const std::vector<CapacityVerdict> &verdicts, double lambda_we) {
    return max_stable_along(verdicts, lambda_we, false);
}

void write_capacity_csv(const std::vector<CapacityVerdict> &verdicts, const std::string &path) {
    CsvWriter csv(path, {"lambda_ns", "lambda_we", "seed", "slope", "final_backup", "stable"});
    for (const auto &v : verdicts) {
        auto seeds = v.seeds;
        std::sort(seeds.begin(), seeds.end(), [](const SeedVerdict &a, const SeedVerdict &b) { return a.seed < b.seed; });
        for (const auto &s : seeds) {
            csv.row_begin();
            csv.field(v.lambda_ns).field(v.lambda_we).field(std::to_string(s.seed)).field(s.verdict.slope)
                .field(s.verdict.final_backup).field(s.verdict.stable ? 1 : 0);
            csv.row_end();
        }
    }
}

void write_capacity_svg(const std::vector<CapacityVerdict> &verdicts, const std::string &title,
                        const std::string &path) {
    SvgPlot plot(title, "lambda_WE = lambda_EW (veh/h)", "lambda_NS = lambda_SN (veh/h)");
    double hi = 100.0;
    for (const auto &v : verdicts) hi = std::max({hi, v.lambda_ns, v.lambda_we});
    plot.set_x_range(0.0, hi + 100.0, hi > 1000.0 ? 200.0 : 100.0);
    plot.set_y_range(0.0, hi + 100.0, hi > 1000.0 ? 200.0 : 100.0);
    std::vector<std::pair<double, double>> stable, unstable;
    for (const auto &v : verdicts) (v.stable ? stable : unstable).push_back({v.lambda_we, v.lambda_ns});
    plot.add_points(stable, SvgPlot::Glyph::Dot, "#1b7837", "stable");
    plot.add_points(unstable, SvgPlot::Glyph::Cross, "#b2182b", "unstable");
    plot.write(path);
}

std::vector<std::pair<double, double>> att_demand_line() {
    std::vector<std::pair<double, double>> pts;
    for (int we = 100; we <= 1300; we += 100) pts.push_back({we, 1400.0 - we});
    return pts;
}

std::vector<AttRecord> att_eval(const AttConfig &cfg, const std::vector<ControllerSpec> &controllers) {
    if (cfg.points.empty()) throw ConfigError("ATT evaluation needs at least one demand point");
    if (cfg.seeds.empty()) throw ConfigError("ATT evaluation needs at least one seed");
    cfg.sim.validate();
    const CorridorNetwork net(cfg.corridor);
    for (const auto &c : controllers) make_controller(c, net.junction_count());

    const std::size_t per_ctl = cfg.points.size() * cfg.seeds.size();
    std::vector<TravelTimeSummary> runs(controllers.size() * per_ctl);
    parallel_for(runs.size(), cfg.threads, [&](std::size_t job) {
        const ControllerSpec &spec = controllers[job / per_ctl];
        const std::size_t rest = job % per_ctl;
        const auto [we, ns] = cfg.points[rest / cfg.seeds.size()];
        SimConfig sim = cfg.sim;
        sim.seed = cfg.seeds[rest % cfg.seeds.size()];
        auto ctl = make_controller(spec, net.junction_count());
        runs[job] = average_travel_time(run(net, DemandConfig{we, we, ns, ns}, sim, *ctl));
    });

    std::vector<AttRecord> out;
    for (std::size_t c = 0; c < controllers.size(); ++c)
        for (std::size_t p = 0; p < cfg.points.size(); ++p) {
            AttRecord rec;
            rec.lambda_we = cfg.points[p].first;
            rec.lambda_ns = cfg.points[p].second;
            rec.architecture = controllers[c].name();
            double sum = 0.0;
            std::size_t used = 0;
            for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
                const auto &r = runs[c * per_ctl + p * cfg.seeds.size() + s];
                rec.vehicles += r.count;
                if (r.count > 0) {
                    sum += r.mean_s;
                    ++used;
                }
            }
            if (used == 0) throw SimError("no vehicle completed its route at demand point (we=" +
                                          format_double(rec.lambda_we) + ", ns=" + format_double(rec.lambda_ns) + ")");
            rec.att_s = sum / static_cast<double>(used);
            out.push_back(std::move(rec));
        }
    return out;
}

void write_att_csv(const std::vector<AttRecord> &records, const std::string &path) {
    CsvWriter csv(path, {"lambda_we", "lambda_ns", "architecture", "att_s", "vehicles"});
    for (const auto &r : records) {
        csv.row_begin();
        csv.field(r.lambda_we).field(r.lambda_ns).field(r.architecture).field(r.att_s).field(r.vehicles);
        csv.row_end();
    }
}

namespace {

struct StopCount {
    std::size_t zero_stop = 0;
    std::size_t total = 0;
};

StopCount count_we(std::span<const VehicleRecord> vehicles, double min_exit_s) {
    StopCount c;
    for (const auto &v : vehicles) {
        if (v.direction != Direction::WE || !v.completed() || *v.exited_at_s < min_exit_s) continue;
        ++c.total;
        if (v.stop_count == 0) ++c.zero_stop;
    }
    return c;
}

} // namespace

double zero_stop_ratio(std::span<const VehicleRecord> vehicles, double min_exit_s) {
    const StopCount c = count_we(vehicles, min_exit_s);
    if (c.total == 0) throw std::domain_error("zero-stop ratio is undefined: no completed WE vehicles");
    return static_cast<double>(c.zero_stop) / static_cast<double>(c.total);
}

std::vector<double> default_green_wave_lengths() {
    std::vector<double> l;
    for (int x = 200; x <= 2000; x += 100) l.push_back(x);
    return l;
}

std::vector<GreenWaveRecord> green_wave_study(const GreenWaveConfig &cfg, const ControllerSpec &controller) {
    if (cfg.link_lengths.empty()) throw ConfigError("green-wave study needs at least one link length");
    if (cfg.seeds.empty()) throw ConfigError("green-wave study needs at least one seed");
    cfg.sim.validate();
    cfg.demand.validate();

    struct Case {
        std::size_t n;
        double l;
    };
    std::vector<Case> cases;
    for (double l : cfg.link_lengths) cases.push_back({cfg.n, l});
    if (cfg.include_single_junction)
        cases.push_back({1, *std::max_element(cfg.link_lengths.begin(), cfg.link_lengths.end())});

    std::vector<CorridorNetwork> nets;
    for (const Case &c : cases) nets.emplace_back(CorridorSpec{c.n, c.l});
    for (const Case &c : cases) make_controller(controller, c.n);

    std::vector<StopCount> counts(cases.size() * cfg.seeds.size());
    parallel_for(counts.size(), cfg.threads, [&](std::size_t job) {
        const std::size_t k = job / cfg.seeds.size();
        SimConfig sim = cfg.sim;
        sim.seed = cfg.seeds[job % cfg.seeds.size()];
        auto ctl = make_controller(controller, cases[k].n);
        const SimResult r = run(nets[k], cfg.demand, sim, *ctl);
        counts[job] = count_we(r.vehicles, sim.warmup_s);
    });

    std::vector<GreenWaveRecord> out;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        StopCount total;
        for (std::size_t s = 0; s < cfg.seeds.size(); ++s) {
            total.zero_stop += counts[k * cfg.seeds.size() + s].zero_stop;
            total.total += counts[k * cfg.seeds.size() + s].total;
        }
        if (total.total == 0)
            throw SimError("no WE vehicle completed the corridor at l=" + format_double(cases[k].l) + " m");
        out.push_back({cases[k].n, cases[k].l, static_cast<double>(total.zero_stop) / static_cast<double>(total.total),
                       total.total});
    }
    return out;
}

void write_green_wave_csv(const std::vector<GreenWaveRecord> &records, const std::string &path) {
    CsvWriter csv(path, {"n", "link_length_m", "zero_stop_ratio", "vehicles"});
    for (const auto &r : records) {
        csv.row_begin();
        csv.field(r.n).field(r.link_length_m).field(r.ratio).field(r.vehicles);
        csv.row_end();
    }
}

void write_green_wave_svg(const std::vector<GreenWaveRecord> &records, const std::string &path) {
    std::vector<std::pair<double, double>> curve;
    std::optional<double> single;
    std::size_t n = 0;
    double lo = 1e300, hi = -1e300;
    for (const auto &r : records) {
        if (r.n == 1) {
            single = r.ratio;
            continue;
        }
        n = r.n;
        curve.push_back({r.link_length_m, r.ratio});
        lo = std::min(lo, r.link_length_m);
        hi = std::max(hi, r.link_length_m);
    }
    if (curve.empty()) throw std::invalid_argument("no multi-junction green-wave records to plot");
    SvgPlot plot("Zero-stop ratio of WE traffic, n = " + std::to_string(n), "link length l (m)", "zero-stop ratio");
    if (hi <= lo) hi = lo + 100.0;
    plot.set_x_range(lo, hi, hi - lo > 1000.0 ? 200.0 : 100.0);
    plot.set_y_range(0.0, 1.0, 0.1);
    plot.add_polyline(curve, "#2166ac", "n = " + std::to_string(n));
    plot.add_points(curve, SvgPlot::Glyph::Dot, "#2166ac", "");
    if (single) {
        const double indep = std::pow(*single, static_cast<double>(n));
        plot.add_polyline({{lo, indep}, {hi, indep}}, "#b2182b", "p1^" + std::to_string(n), true);
    }
    plot.write(path);
}

PpoConfig ppo_preset(const std::string &name) {
    PpoConfig cfg;
    if (name == "default") return cfg;
    if (name == "smoke") {
        cfg.episodes = 100;
        cfg.episode_duration_s = 3000.0;
        cfg.observation.phase_feature = true;
        cfg.entropy_coef = 0.3;
        cfg.lr = 1e-3;
        cfg.minibatch_size = 64;
        cfg.epochs_per_update = 10;
        return cfg;
    }
    throw ConfigError("unknown training preset '" + name + "' (expected default or smoke)");
}

} // namespace corridor
