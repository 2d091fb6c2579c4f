#include "seelab/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "seelab/h1_condition.hpp"

namespace seelab {
namespace {

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"model", {"name"}},
    {"basis", {"dim", "eigenvalues", "scale", "power"}},
    {"drift", {"kind", "rates", "offset", "table"}},
    {"bilinear", {"kind", "entries"}},
    {"noise", {"kind", "amplitudes", "c_min", "g0", "slope", "lo", "hi", "matrix", "columns"}},
    {"constants", {"lipschitz_c1", "f0_vstar", "sigma0_hs", "damping_gamma", "coupling_n", "h1_f0_squared"}},
    {"stepper", {"dt", "scheme", "penalty_n", "horizon"}},
    {"plan", {"n_paths", "t_grid", "base_seed", "first_path"}},
    {"initial", {"x0", "y0"}},
    {"distance", {"delta", "n_tilde"}},
    {"ergodicity",
     {"contraction_grid", "contraction_pairs", "dsmall_level", "dsmall_time", "burn", "average", "thin",
      "invariance_horizon", "test_functions"}},
    {"convergence", {"penalties"}},
    {"output", {"directory", "formats", "trajectories"}},
    {"nse", {"kappa", "gamma", "noise_amplitude", "noise_decay", "forcing", "experiment"}},
};

const char* kDefaultSkewEntries = "1:2:3:0.1, 2:1:4:0.1, 3:2:5:0.05";

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(trim(cur));
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

class Reader {
public:
    explicit Reader(const std::string& text) {
        std::istringstream is(text);
        std::string raw, section;
        int line = 0;
        while (std::getline(is, raw)) {
            ++line;
            const auto hash = raw.find('#');
            const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
            if (s.empty()) continue;
            if (s.front() == '[') {
                if (s.back() != ']') {
                    error(line, "malformed section header '" + s + "'");
                    section.clear();
                    continue;
                }
                section = trim(s.substr(1, s.size() - 2));
                if (!kKnownKeys.count(section)) {
                    error(line, "unknown section [" + section + "]");
                } else if (!section_lines_.emplace(section, line).second) {
                    error(line, "duplicate section [" + section + "] (first on line " +
                                    std::to_string(section_lines_[section]) + ")");
                }
                continue;
            }
            const auto eq = s.find('=');
            if (eq == std::string::npos) {
                error(line, "expected key = value, got '" + s + "'");
                continue;
            }
            const std::string key = trim(s.substr(0, eq));
            const std::string value = trim(s.substr(eq + 1));
            if (section.empty()) {
                error(line, "key '" + key + "' outside of any section");
                continue;
            }
            const auto known = kKnownKeys.find(section);
            if (known == kKnownKeys.end()) continue;  // already reported
            if (!known->second.count(key)) {
                error(line, "unknown key '" + key + "' in [" + section + "]");
                continue;
            }
            auto& slot = entries_[section];
            const auto prev = slot.find(key);
            if (prev != slot.end()) {
                error(line, "duplicate key '" + key + "' in [" + section + "] (first on line " +
                                std::to_string(prev->second.line) + ", again on line " + std::to_string(line) + ")");
                continue;
            }
            if (value.empty()) {
                error(line, "empty value for '" + key + "'");
                continue;
            }
            slot.emplace(key, Entry{value, line});
        }
    }

    void error(int line, const std::string& msg) {
        errors_.push_back(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg);
    }
    const std::vector<std::string>& errors() const { return errors_; }

    bool has_section(const std::string& s) const { return section_lines_.count(s) > 0; }
    int section_line(const std::string& s) const {
        const auto it = section_lines_.find(s);
        return it == section_lines_.end() ? 0 : it->second;
    }

    const Entry* find(const std::string& section, const std::string& key) const {
        const auto s = entries_.find(section);
        if (s == entries_.end()) return nullptr;
        const auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }
    int line(const std::string& section, const std::string& key) const {
        const auto* e = find(section, key);
        return e ? e->line : 0;
    }

    std::string text(const std::string& section, const std::string& key, const std::string& fallback) const {
        const auto* e = find(section, key);
        return e ? e->value : fallback;
    }

    double number(const std::string& section, const std::string& key, double fallback) {
        const auto* e = find(section, key);
        if (!e) return fallback;
        double v = 0.0;
        if (!parse_double(e->value, v)) {
            error(e->line, "[" + section + "] " + key + ": expected a number, got '" + e->value + "'");
            return fallback;
        }
        return v;
    }

    std::optional<double> number_or_auto(const std::string& section, const std::string& key) {
        const auto* e = find(section, key);
        if (!e || e->value == "auto") return std::nullopt;
        return number(section, key, 0.0);
    }

    std::uint64_t integer(const std::string& section, const std::string& key, std::uint64_t fallback) {
        const auto* e = find(section, key);
        if (!e) return fallback;
        const std::string& s = e->value;
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
        if (s.empty() || s[0] == '-' || errno != 0 || *end != '\0') {
            error(e->line, "[" + section + "] " + key + ": expected a nonnegative integer, got '" + s + "'");
            return fallback;
        }
        return v;
    }

    bool boolean(const std::string& section, const std::string& key, bool fallback) {
        const auto* e = find(section, key);
        if (!e) return fallback;
        if (e->value == "true") return true;
        if (e->value == "false") return false;
        error(e->line, "[" + section + "] " + key + ": expected true or false, got '" + e->value + "'");
        return fallback;
    }

    std::vector<double> list(const std::string& section, const std::string& key, std::vector<double> fallback) {
        const auto* e = find(section, key);
        if (!e) return fallback;
        std::vector<double> out;
        for (const auto& item : split(e->value, ',')) {
            double v = 0.0;
            if (!parse_double(item, v)) {
                error(e->line, "[" + section + "] " + key + ": '" + item + "' is not a number");
                return fallback;
            }
            out.push_back(v);
        }
        return out;
    }

    /// A scalar broadcast to `dim` entries, or an explicit list of exactly `dim` entries.
    std::vector<double> per_mode(const std::string& section, const std::string& key, std::size_t dim,
                                 double fallback) {
        auto v = list(section, key, {fallback});
        if (v.size() == 1) return std::vector<double>(dim, v[0]);
        if (v.size() != dim) {
            error(line(section, key), "[" + section + "] " + key + ": expected 1 or " + std::to_string(dim) +
                                          " values, got " + std::to_string(v.size()));
            return std::vector<double>(dim, fallback);
        }
        return v;
    }

    /// A list of at most `dim` entries, zero-padded.
    std::vector<double> padded(const std::string& section, const std::string& key, std::size_t dim,
                               std::vector<double> fallback) {
        auto v = list(section, key, std::move(fallback));
        if (v.size() > dim) {
            error(line(section, key), "[" + section + "] " + key + ": " + std::to_string(v.size()) +
                                          " values exceed basis dim " + std::to_string(dim));
            v.resize(dim);
        }
        v.resize(dim, 0.0);
        return v;
    }

    static bool parse_double(const std::string& s, double& out) {
        if (s.empty()) return false;
        char* end = nullptr;
        errno = 0;
        out = std::strtod(s.c_str(), &end);
        return errno == 0 && *end == '\0' && std::isfinite(out);
    }

private:
    std::map<std::string, int> section_lines_;
    std::map<std::string, std::map<std::string, Entry>> entries_;
    std::vector<std::string> errors_;
};

std::vector<TensorEntry> parse_tensor(Reader& r, const std::string& text, int line) {
    std::vector<TensorEntry> out;
    for (const auto& item : split(text, ',')) {
        const auto parts = split(item, ':');
        double vals[4] = {0, 0, 0, 0};
        bool ok = parts.size() == 4;
        for (std::size_t i = 0; ok && i < 4; ++i) ok = Reader::parse_double(parts[i], vals[i]);
        if (!ok || vals[0] < 1 || vals[1] < 1 || vals[2] < 1 || vals[0] != std::floor(vals[0]) ||
            vals[1] != std::floor(vals[1]) || vals[2] != std::floor(vals[2])) {
            r.error(line, "[bilinear] entries: expected i:j:k:value with 1-based indices, got '" + item + "'");
            continue;
        }
        out.push_back({static_cast<std::uint32_t>(vals[0] - 1), static_cast<std::uint32_t>(vals[1] - 1),
                       static_cast<std::uint32_t>(vals[2] - 1), vals[3]});
    }
    return out;
}

std::string model_location(const Reader& r, const char* section, const char* key) {
    const int l = r.line(section, key);
    return l > 0 ? "line " + std::to_string(l) + ": " : "";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : ValidationError([&] {
          std::string msg = "invalid config:";
          for (const auto& e : errors) msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors)) {}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

ExperimentConfig parse_config_text(const std::string& text) {
    Reader r(text);
    ExperimentConfig cfg;
    cfg.source = text;
    cfg.hash = fnv1a64(text);
    std::vector<std::string> errors;

    // stepper
    cfg.stepper.dt = r.number("stepper", "dt", 1e-3);
    const std::string scheme = r.text("stepper", "scheme", "projected");
    if (scheme == "projected") {
        cfg.stepper.scheme = Scheme::projected;
    } else if (scheme == "penalized") {
        cfg.stepper.scheme = Scheme::penalized;
    } else {
        r.error(r.line("stepper", "scheme"), "[stepper] scheme must be projected or penalized, got '" + scheme + "'");
    }
    cfg.stepper.penalty_n = r.number("stepper", "penalty_n", 1e4);
    cfg.horizon = r.number("stepper", "horizon", 2.0);
    try {
        validate_stepper(cfg.stepper);
    } catch (const ValidationError& e) {
        r.error(r.section_line("stepper"), std::string("[stepper] ") + e.what());
    }
    if (!(cfg.horizon > 0.0)) r.error(r.line("stepper", "horizon"), "[stepper] horizon must be positive");

    // plan
    cfg.plan.n_paths = r.integer("plan", "n_paths", 200);
    std::vector<double> default_grid;
    if (cfg.horizon > 0.0 && cfg.stepper.dt > 0.0) {
        for (double q : {0.0, 0.125, 0.25, 0.5, 1.0}) {
            const double t = std::round(q * cfg.horizon / cfg.stepper.dt) * cfg.stepper.dt;
            if (default_grid.empty() || t > default_grid.back()) default_grid.push_back(t);
        }
    }
    cfg.plan.t_grid = r.list("plan", "t_grid", default_grid);
    cfg.plan.base_seed = r.integer("plan", "base_seed", 1);
    cfg.plan.first_path = r.integer("plan", "first_path", 0);
    cfg.plan.stepper = cfg.stepper;
    {
        const int l = r.line("plan", "t_grid");
        for (std::size_t i = 0; i < cfg.plan.t_grid.size(); ++i) {
            const double t = cfg.plan.t_grid[i];
            if (t < 0.0 || t > cfg.horizon + 1e-12) {
                r.error(l, "[plan] t_grid value " + std::to_string(t) + " outside [0, horizon]");
            }
            if (i > 0 && !(t > cfg.plan.t_grid[i - 1])) r.error(l, "[plan] t_grid must be strictly increasing");
            const double steps = t / cfg.stepper.dt;
            if (cfg.stepper.dt > 0.0 && std::abs(steps - std::round(steps)) > 1e-9 * std::max(1.0, steps)) {
                r.error(l, "[plan] t_grid value " + std::to_string(t) + " is not a multiple of dt");
            }
        }
        if (cfg.plan.t_grid.empty()) r.error(l, "[plan] t_grid must be nonempty");
    }

    // distance
    if (const auto d = r.number_or_auto("distance", "delta")) {
        cfg.delta_auto = false;
        cfg.distance.delta = *d;
    }
    cfg.distance.n_tilde = r.number("distance", "n_tilde", 1.0);
    try {
        validate_distance(cfg.distance);
    } catch (const ValidationError& e) {
        r.error(r.section_line("distance"), std::string("[distance] ") + e.what());
    }

    // ergodicity
    auto& eg = cfg.ergodicity;
    eg.contraction_grid = r.list("ergodicity", "contraction_grid", eg.contraction_grid);
    eg.contraction_pairs = r.integer("ergodicity", "contraction_pairs", eg.contraction_pairs);
    eg.dsmall_level = r.number("ergodicity", "dsmall_level", eg.dsmall_level);
    eg.dsmall_time = r.number("ergodicity", "dsmall_time", eg.dsmall_time);
    eg.burn = r.number("ergodicity", "burn", eg.burn);
    eg.average = r.number("ergodicity", "average", eg.average);
    eg.thin = r.number("ergodicity", "thin", eg.thin);
    eg.invariance_horizon = r.number("ergodicity", "invariance_horizon", eg.invariance_horizon);
    eg.test_functions = r.integer("ergodicity", "test_functions", eg.test_functions);
    if (eg.test_functions < 2) r.error(r.line("ergodicity", "test_functions"), "[ergodicity] test_functions must be >= 2");
    if (!(eg.thin > 0.0)) r.error(r.line("ergodicity", "thin"), "[ergodicity] thin must be positive");

    cfg.penalties = r.list("convergence", "penalties", cfg.penalties);
    for (double n : cfg.penalties) {
        if (!(n > 0.0)) r.error(r.line("convergence", "penalties"), "[convergence] penalties must be positive");
    }

    cfg.output.directory = r.text("output", "directory", cfg.output.directory);
    cfg.output.formats = r.text("output", "formats", cfg.output.formats);
    if (cfg.output.formats != "csv") r.error(r.line("output", "formats"), "[output] formats: only 'csv' is supported");
    cfg.output.trajectories = r.integer("output", "trajectories", cfg.output.trajectories);

    const std::size_t coupling_n = r.integer("constants", "coupling_n", 4);

    if (r.has_section("nse")) {
        for (const char* s : {"basis", "drift", "bilinear", "noise"}) {
            if (r.has_section(s)) {
                r.error(r.section_line(s), std::string("[") + s + "] cannot be combined with [nse]");
            }
        }
        NseParams p;
        p.kappa = static_cast<int>(r.integer("nse", "kappa", 4));
        p.gamma = r.number("nse", "gamma", 1.0);
        p.noise_amplitude = r.number("nse", "noise_amplitude", 0.0);
        p.noise_decay = r.number("nse", "noise_decay", 0.0);
        p.forcing = r.list("nse", "forcing", {});
        p.coupling_n = coupling_n;
        try {
            cfg.nse_experiment = parse_nse_experiment(r.text("nse", "experiment", "verify-model"));
        } catch (const ValidationError& e) {
            r.error(r.line("nse", "experiment"), e.what());
        }
        if (r.errors().empty()) {
            try {
                const std::size_t modes = build_fourier_grid(p.kappa).size();
                if (coupling_n + 1 > modes) {
                    r.error(r.line("constants", "coupling_n"), "coupling_n must be < basis dim");
                } else {
                    auto nse = std::make_shared<NseModel>(build_nse_model(p));
                    cfg.model = std::shared_ptr<const ModelSpec>(nse, &nse->spec);
                    cfg.nse = nse;
                }
            } catch (const ValidationError& e) {
                r.error(r.section_line("nse"), std::string("[nse] ") + e.what());
            }
        }
    } else {
        // basis
        std::vector<double> lambda = r.list("basis", "eigenvalues", {});
        std::size_t dim = r.integer("basis", "dim", lambda.empty() ? 16 : lambda.size());
        if (!lambda.empty() && lambda.size() != dim) {
            r.error(r.line("basis", "dim"), "[basis] dim " + std::to_string(dim) + " disagrees with " +
                                                std::to_string(lambda.size()) + " eigenvalues");
        }
        if (lambda.empty()) {
            const double scale = r.number("basis", "scale", 1.0);
            const double power = r.number("basis", "power", 2.0);
            for (std::size_t i = 1; i <= dim; ++i) lambda.push_back(scale * std::pow(static_cast<double>(i), power));
        } else if (r.find("basis", "scale") || r.find("basis", "power")) {
            r.error(r.line("basis", "eigenvalues"), "[basis] give either eigenvalues or scale/power, not both");
        }
        if (dim < 2) r.error(r.line("basis", "dim"), "[basis] dim must be >= 2");
        if (coupling_n + 1 > dim) {
            r.error(r.line("constants", "coupling_n"), "coupling_n must be < basis dim");
        }
        if (coupling_n == 0) r.error(r.line("constants", "coupling_n"), "coupling_n must be >= 1");

        // drift
        DriftMap drift;
        const std::string dkind = r.text("drift", "kind", "linear_decay");
        if (dkind == "linear_decay") {
            drift.kind = DriftKind::linear_decay;
            drift.rates = r.per_mode("drift", "rates", dim, 1.0);
        } else if (dkind == "affine") {
            drift.kind = DriftKind::affine;
            drift.rates = r.per_mode("drift", "rates", dim, 0.0);
            drift.offset = r.padded("drift", "offset", dim, {});
        } else if (dkind == "custom_table") {
            drift.kind = DriftKind::custom_table;
            drift.table = r.list("drift", "table", {});
            if (drift.table.size() != dim * dim) {
                r.error(r.line("drift", "table"), "[drift] table needs dim*dim = " + std::to_string(dim * dim) +
                                                      " values, got " + std::to_string(drift.table.size()));
            }
            drift.offset = r.padded("drift", "offset", dim, {});
        } else {
            r.error(r.line("drift", "kind"), "[drift] unknown kind '" + dkind + "'");
        }
        if (drift.kind != DriftKind::affine && dkind != "custom_table" && r.find("drift", "offset")) {
            r.error(r.line("drift", "offset"), "[drift] offset requires kind affine or custom_table");
        }

        // bilinear
        BilinearForm form;
        const std::string bkind = r.text("bilinear", "kind", "skew_shear");
        if (bkind == "zero") {
            if (r.find("bilinear", "entries")) r.error(r.line("bilinear", "entries"), "[bilinear] zero form takes no entries");
        } else if (bkind == "skew_shear") {
            const Entry* e = r.find("bilinear", "entries");
            auto raw = parse_tensor(r, e ? e->value : kDefaultSkewEntries, e ? e->line : 0);
            if (!e) {
                std::erase_if(raw, [dim](const TensorEntry& t) { return t.i >= dim || t.j >= dim || t.k >= dim; });
            }
            try {
                form = make_skew_shear(dim, raw);
            } catch (const ValidationError& ex) {
                r.error(r.line("bilinear", "entries"), std::string("[bilinear] ") + ex.what());
            }
        } else {
            r.error(r.line("bilinear", "kind"), "[bilinear] unknown kind '" + bkind + "' (zero or skew_shear)");
        }

        // noise
        NoiseMap noise;
        const std::string nkind = r.text("noise", "kind", "diag_affine");
        if (nkind == "diag_affine") {
            noise.amplitudes = r.per_mode("noise", "amplitudes", dim, 0.025);
            double floor = noise.amplitudes.empty() ? 0.0 : noise.amplitudes[0];
            for (std::size_t i = 0; i < std::min(coupling_n, noise.amplitudes.size()); ++i) {
                floor = std::min(floor, noise.amplitudes[i]);
            }
            noise.c_min = r.number("noise", "c_min", floor);
            noise.modulation.g0 = r.number("noise", "g0", 1.0);
            noise.modulation.slope = r.number("noise", "slope", 0.0);
            noise.modulation.lo = r.number("noise", "lo", 1.0);
            noise.modulation.hi = r.number("noise", "hi", 1.0);
        } else if (nkind == "custom") {
            noise.kind = NoiseKind::custom;
            noise.columns = r.integer("noise", "columns", dim);
            noise.matrix = r.list("noise", "matrix", {});
            if (noise.matrix.size() != dim * noise.columns) {
                r.error(r.line("noise", "matrix"), "[noise] matrix needs dim*columns = " +
                                                       std::to_string(dim * noise.columns) + " values, got " +
                                                       std::to_string(noise.matrix.size()));
            }
        } else {
            r.error(r.line("noise", "kind"), "[noise] unknown kind '" + nkind + "' (diag_affine or custom)");
        }

        const auto c1 = r.number_or_auto("constants", "lipschitz_c1");
        const auto f0 = r.number_or_auto("constants", "f0_vstar");
        const auto s0 = r.number_or_auto("constants", "sigma0_hs");
        const double gamma = r.number("constants", "damping_gamma", 0.0);
        const bool f0_sq = r.boolean("constants", "h1_f0_squared", true);
        const std::string name = r.text("model", "name", "model");

        if (r.errors().empty()) {
            try {
                auto spec = std::make_shared<ModelSpec>(ModelSpec{name, build_basis(lambda), drift, form, noise});
                spec->coupling_n = coupling_n;
                spec->damping_gamma = gamma;
                spec->h1_f0_squared = f0_sq;
                spec->f0_vstar = f0 ? *f0 : compute_f0_vstar(*spec);
                spec->sigma0_hs = s0 ? *s0 : compute_sigma0_hs(*spec);
                if (c1) {
                    spec->lipschitz_c1 = *c1;
                } else if (const auto a = analytic_c1(*spec)) {
                    spec->lipschitz_c1 = *a;
                } else {
                    r.error(r.section_line("constants"),
                            "[constants] lipschitz_c1 must be declared for custom drift or noise");
                }
                validate_model(*spec);
                cfg.model = spec;
            } catch (const ValidationError& e) {
                r.error(0, model_location(r, "basis", "eigenvalues") + std::string("model: ") + e.what());
            }
        }
    }

    if (cfg.model) {
        const std::size_t dim = cfg.model->basis.dim();
        std::vector<double> x0(dim, 0.0), y0(dim, 0.0);
        x0[0] = 0.5;
        y0[0] = -0.4;
        x0 = r.padded("initial", "x0", dim, x0);
        y0 = r.padded("initial", "y0", dim, y0);
        cfg.x0 = StateVector::from(cfg.model->basis, x0);
        cfg.y0 = StateVector::from(cfg.model->basis, y0);
        if (h_norm(cfg.x0) > 1.0) r.error(r.line("initial", "x0"), "[initial] x0 lies outside the unit ball");
        if (h_norm(cfg.y0) > 1.0) r.error(r.line("initial", "y0"), "[initial] y0 lies outside the unit ball");
        if (cfg.delta_auto) cfg.distance.delta = select_delta(*cfg.model).delta;
    }

    if (!r.errors().empty()) throw ConfigError(r.errors());
    return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"cannot read config file '" + path + "'"});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace seelab
