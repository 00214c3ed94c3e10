#pragma once

// Config files (JSON or a TOML subset), report serialization and CSV output.

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "hillkdv/actions.hpp"
#include "hillkdv/analysis.hpp"
#include "hillkdv/errors.hpp"
#include "hillkdv/hill_spectrum.hpp"
#include "hillkdv/potential.hpp"
#include "hillkdv/reduction.hpp"

namespace hillkdv {

using json = nlohmann::json;

// ---- formatting ---------------------------------------------------------------

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v + 0.0);
    return buf;
}

inline json to_json(cd z) { return json{{"re", z.real() + 0.0}, {"im", z.imag() + 0.0}}; }

inline cd complex_from_json(const json& j) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    return {j.at("re").get<double>(), j.value("im", 0.0)};
}

inline json to_json(const std::vector<cd>& v) {
    json a = json::array();
    for (cd z : v) a.push_back(to_json(z));
    return a;
}

/// Rows of comma-separated values with a header line.
class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvTable& row() {
        rows_.emplace_back();
        return *this;
    }
    CsvTable& add(double v) {
        rows_.back().push_back(fmt(v));
        return *this;
    }
    CsvTable& add(int v) {
        rows_.back().push_back(std::to_string(v));
        return *this;
    }
    CsvTable& add(cd z) { return add(z.real()).add(z.imag()); }

    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < header_.size(); ++i) out += (i ? "," : "") + header_[i];
        out += "\n";
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i) out += (i ? "," : "") + r[i];
            out += "\n";
        }
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidConfig, "cannot write " + p.string());
    f << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::InvalidConfig, "cannot read " + p.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

// ---- TOML subset ----------------------------------------------------------------

namespace detail {

// Tables, arrays of tables, dotted keys, strings, numbers, booleans, arrays
// and inline tables. Dates and multi-line strings are not supported.
class TomlParser {
public:
    explicit TomlParser(std::string text) : s_(std::move(text)) {}

    json parse() {
        json root = json::object();
        json* current = &root;
        for (;;) {
            skip_ws_nl();
            if (eof()) break;
            if (peek() == '[') {
                const bool array = s_.compare(i_, 2, "[[") == 0;
                i_ += array ? 2 : 1;
                std::vector<std::string> path = key_path();
                skip_ws();
                if (array ? s_.compare(i_, 2, "]]") != 0 : peek() != ']') fail("unterminated table header");
                i_ += array ? 2 : 1;
                json* t = &root;
                for (std::size_t k = 0; k + 1 < path.size(); ++k) t = &descend(*t, path[k]);
                json& leaf = (*t)[path.back()];
                if (array) {
                    if (leaf.is_null()) leaf = json::array();
                    if (!leaf.is_array()) fail("key redefined as array of tables: " + path.back());
                    leaf.push_back(json::object());
                    current = &leaf.back();
                } else {
                    if (leaf.is_null()) leaf = json::object();
                    if (!leaf.is_object()) fail("key redefined as table: " + path.back());
                    current = &leaf;
                }
                end_of_line();
                continue;
            }
            assign(*current);
            end_of_line();
        }
        return root;
    }

private:
    [[noreturn]] void fail(const std::string& what) const {
        int line = 1;
        for (std::size_t k = 0; k < i_ && k < s_.size(); ++k) line += s_[k] == '\n';
        throw Error(ErrorKind::InvalidConfig, "TOML line " + std::to_string(line) + ": " + what);
    }
    bool eof() const { return i_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[i_]; }

    void skip_ws() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) ++i_;
    }
    void skip_comment() {
        if (peek() == '#')
            while (!eof() && peek() != '\n') ++i_;
    }
    void skip_ws_nl() {
        for (;;) {
            skip_ws();
            skip_comment();
            if (!eof() && (peek() == '\n' || peek() == '\r')) {
                ++i_;
                continue;
            }
            break;
        }
    }
    void end_of_line() {
        skip_ws();
        skip_comment();
        if (!eof() && peek() != '\n' && peek() != '\r') fail("unexpected trailing characters");
    }

    static json& descend(json& t, const std::string& k) {
        json& child = t[k];
        if (child.is_null()) child = json::object();
        if (child.is_array()) return child.back();
        return child;
    }

    std::string key() {
        skip_ws();
        if (peek() == '"') return string_value();
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) {
            k += s_[i_++];
        }
        if (k.empty()) fail("expected a key");
        return k;
    }

    std::vector<std::string> key_path() {
        std::vector<std::string> path{key()};
        skip_ws();
        while (peek() == '.') {
            ++i_;
            path.push_back(key());
            skip_ws();
        }
        return path;
    }

    void assign(json& table) {
        std::vector<std::string> path = key_path();
        skip_ws();
        if (peek() != '=') fail("expected '='");
        ++i_;
        skip_ws();
        json* t = &table;
        for (std::size_t k = 0; k + 1 < path.size(); ++k) t = &descend(*t, path[k]);
        if (t->contains(path.back())) fail("duplicate key " + path.back());
        (*t)[path.back()] = value();
    }

    std::string string_value() {
        ++i_; // opening quote
        std::string out;
        while (!eof() && peek() != '"') {
            char c = s_[i_++];
            if (c == '\n') fail("newline in string");
            if (c == '\\') {
                const char e = s_[i_++];
                switch (e) {
                case 'n': c = '\n'; break;
                case 't': c = '\t'; break;
                case '"': c = '"'; break;
                case '\\': c = '\\'; break;
                default: fail("unsupported escape");
                }
            }
            out += c;
        }
        if (eof()) fail("unterminated string");
        ++i_;
        return out;
    }

    json value() {
        skip_ws();
        const char c = peek();
        if (c == '"') return string_value();
        if (c == '[') {
            ++i_;
            json arr = json::array();
            for (;;) {
                skip_ws_nl();
                if (peek() == ']') {
                    ++i_;
                    return arr;
                }
                arr.push_back(value());
                skip_ws_nl();
                if (peek() == ',') {
                    ++i_;
                    continue;
                }
                if (peek() != ']') fail("expected ',' or ']'");
            }
        }
        if (c == '{') {
            ++i_;
            json obj = json::object();
            skip_ws();
            if (peek() == '}') {
                ++i_;
                return obj;
            }
            for (;;) {
                assign(obj);
                skip_ws();
                if (peek() == ',') {
                    ++i_;
                    continue;
                }
                if (peek() != '}') fail("expected ',' or '}'");
                ++i_;
                return obj;
            }
        }
        if (s_.compare(i_, 4, "true") == 0) {
            i_ += 4;
            return true;
        }
        if (s_.compare(i_, 5, "false") == 0) {
            i_ += 5;
            return false;
        }
        std::string num;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '+' || peek() == '-' ||
                          peek() == '.' || peek() == '_')) {
            if (peek() != '_') num += peek();
            ++i_;
        }
        if (num.empty()) fail("expected a value");
        if (num == "inf" || num == "+inf" || num == "-inf" || num == "nan") fail("non-finite number");
        const bool is_float = num.find_first_of(".eE") != std::string::npos;
        try {
            std::size_t used = 0;
            if (is_float) {
                const double v = std::stod(num, &used);
                if (used != num.size()) fail("bad number " + num);
                return v;
            }
            const long long v = std::stoll(num, &used);
            if (used != num.size()) fail("bad number " + num);
            return v;
        } catch (const std::logic_error&) {
            fail("bad number " + num);
        }
    }

    std::string s_;
    std::size_t i_ = 0;
};

} // namespace detail

inline json parse_toml(const std::string& text) { return detail::TomlParser(text).parse(); }

/// JSON or TOML, chosen by the file extension.
inline json load_structured(const std::filesystem::path& p) {
    const std::string text = read_text(p);
    if (p.extension() == ".toml") return parse_toml(text);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, p.string() + ": " + e.what());
    }
}

// ---- potentials and configs ---------------------------------------------------------

/// {"modes": [{"k", "re", "im"}], "real": bool} or {"random": {"seed", "alpha",
/// "count", "amplitude"}}. For real potentials missing partners q_{-k} are
/// filled with conj(q_k).
inline PotentialSpec parse_potential_spec(const json& j) {
    PotentialSpec spec;
    try {
        if (j.contains("random")) {
            const json& r = j.at("random");
            spec.random = true;
            spec.seed = r.at("seed").get<std::uint64_t>();
            spec.alpha = r.at("alpha").get<double>();
            spec.count = r.at("count").get<int>();
            spec.amplitude = r.at("amplitude").get<double>();
            if (spec.alpha < 0.0) throw Error(ErrorKind::InvalidConfig, "random.alpha must be >= 0");
            if (spec.count < 1) throw Error(ErrorKind::InvalidConfig, "random.count must be >= 1");
            return spec;
        }
        spec.real = j.value("real", true);
        if (j.contains("modes")) {
            for (const json& m : j.at("modes")) {
                const int k = m.at("k").get<int>();
                const cd v(m.value("re", 0.0), m.value("im", 0.0));
                if (spec.modes.count(k)) throw Error(ErrorKind::InvalidConfig, "duplicate mode k=" + std::to_string(k));
                spec.modes[k] = v;
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("potential spec: ") + e.what());
    }
    if (spec.modes.count(0)) throw Error(ErrorKind::NonZeroMean, "mode k=0 given");
    if (spec.real) {
        FourierPotential::Table filled = spec.modes;
        for (const auto& [k, v] : spec.modes) {
            if (!spec.modes.count(-k)) filled[-k] = std::conj(v);
        }
        spec.modes = filled;
    }
    return spec;
}

inline json potential_to_json(const FourierPotential& pot) {
    json modes = json::array();
    for (const auto& [k, v] : pot.coeffs()) modes.push_back({{"k", k}, {"re", v.real() + 0.0}, {"im", v.imag() + 0.0}});
    return json{{"modes", modes}, {"real", pot.real()}};
}

inline ExperimentConfig parse_config(const json& j, const std::filesystem::path& base_dir = {}) {
    ExperimentConfig cfg;
    try {
        if (j.contains("potential_file")) {
            std::filesystem::path p = j.at("potential_file").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            cfg.potential = parse_potential_spec(load_structured(p));
        } else if (j.contains("potential")) {
            cfg.potential = parse_potential_spec(j.at("potential"));
        } else {
            cfg.potential = parse_potential_spec(j);
        }
        cfg.galerkin_n = j.value("galerkin_n", cfg.galerkin_n);
        cfg.product_m = j.value("product_m", cfg.product_m);
        cfg.n_cut = j.value("n_cut", cfg.n_cut);
        cfg.ode_steps = j.value("ode_steps", cfg.ode_steps);
        cfg.contour_nodes = j.value("contour_nodes", cfg.contour_nodes);
        cfg.residual_tol = j.value("residual_tol", cfg.residual_tol);
        cfg.probe_mode = j.value("probe_mode", cfg.probe_mode);
        cfg.frequency_modes = j.value("frequency_modes", cfg.frequency_modes);
        cfg.frequency_step = j.value("frequency_step", cfg.frequency_step);
        cfg.reduce_modes = j.value("reduce_modes", cfg.reduce_modes);
        if (j.contains("ladder")) cfg.ladder = j.at("ladder").get<std::vector<double>>();
        if (j.contains("weights")) {
            cfg.weights.clear();
            for (const json& w : j.at("weights")) {
                cfg.weights.push_back(SeqWeight::make(w.at("s").get<double>(), w.at("p").get<double>()));
            }
        }
        if (j.contains("spectra_file")) {
            std::filesystem::path p = j.at("spectra_file").get<std::string>();
            if (p.is_relative()) p = base_dir / p;
            cfg.spectra_file = p.string();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& p) {
    return parse_config(load_structured(p), p.parent_path());
}

// ---- spectra --------------------------------------------------------------------------

inline json spectra_to_json(const HillSpectra& sp) {
    json pairs = json::array();
    for (int n = 1; n <= sp.n_max; ++n) {
        pairs.push_back({{"n", n}, {"minus", to_json(sp.minus(n))}, {"plus", to_json(sp.plus(n))}});
    }
    json j{{"lambda0_plus", to_json(sp.lambda0_plus)},
           {"pairs", pairs},
           {"mu", to_json(sp.mu)},
           {"gamma", to_json(sp.gamma)},
           {"tau", to_json(sp.tau)},
           {"residual", sp.residual},
           {"n_max", sp.n_max},
           {"threshold", sp.threshold},
           {"real", sp.real}};
    if (!sp.crit.empty()) j["crit"] = to_json(sp.crit);
    return j;
}

inline HillSpectra spectra_from_json(const json& j) {
    HillSpectra sp;
    try {
        sp.lambda0_plus = complex_from_json(j.at("lambda0_plus"));
        for (const json& p : j.at("pairs")) {
            sp.pairs.emplace_back(complex_from_json(p.at("minus")), complex_from_json(p.at("plus")));
        }
        for (const json& m : j.at("mu")) sp.mu.push_back(complex_from_json(m));
        sp.residual = j.at("residual").get<std::vector<double>>();
        sp.n_max = j.at("n_max").get<int>();
        sp.threshold = j.at("threshold").get<int>();
        sp.real = j.at("real").get<bool>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::InvalidConfig, std::string("spectra: ") + e.what());
    }
    if (static_cast<int>(sp.pairs.size()) != sp.n_max || static_cast<int>(sp.mu.size()) != sp.n_max) {
        throw Error(ErrorKind::InvalidConfig, "spectra: table lengths differ from n_max");
    }
    sp.fill_derived();
    return sp;
}

/// Reads the "spectra" member of a spectrum report (or a bare spectra object).
inline HillSpectra load_spectra(const std::filesystem::path& p) {
    const json j = load_structured(p);
    return spectra_from_json(j.contains("spectra") ? j.at("spectra") : j);
}

inline std::string spectra_csv(const HillSpectra& sp) {
    CsvTable t({"n", "lambda_minus_re", "lambda_minus_im", "lambda_plus_re", "lambda_plus_im", "mu_re", "mu_im",
                "gamma_re", "gamma_im", "tau_re", "tau_im", "crit_re", "crit_im"});
    t.row().add(0).add(sp.lambda0_plus).add(sp.lambda0_plus).add(cd(0.0)).add(cd(0.0)).add(sp.lambda0_plus).add(
        sp.lambda0_plus);
    for (int n = 1; n <= sp.n_max; ++n) {
        const cd crit = n <= static_cast<int>(sp.crit.size()) ? sp.crit[n - 1] : cd(NAN, NAN);
        t.row().add(n).add(sp.minus(n)).add(sp.plus(n)).add(sp.mu[n - 1]).add(sp.gap(n)).add(sp.mid(n)).add(crit);
    }
    return t.str();
}

// ---- reports ----------------------------------------------------------------------------

inline json nan_safe(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json gap_to_json(const GapIntegrals& g) {
    return json{{"n", g.n},
                {"collapsed", g.collapsed},
                {"I", to_json(g.I)},
                {"I_alt", to_json(g.I_alt)},
                {"I_gap", nan_safe(g.I_gap)},
                {"R", to_json(g.R)},
                {"R_gap", nan_safe(g.R_gap)},
                {"F2_loop", to_json(g.F2_loop)},
                {"psi_loop", to_json(g.psi_loop)},
                {"F_sup", g.F_sup},
                {"center", to_json(g.contour.center)},
                {"radius", g.contour.radius},
                {"nodes", g.nodes}};
}

inline json hamiltonian_to_json(const HamiltonianReport& r) {
    json gaps = json::array();
    for (const auto& g : r.gaps) gaps.push_back(gap_to_json(g));
    return json{{"I", to_json(r.I)},
                {"R", to_json(r.R)},
                {"H0", to_json(r.H0)},
                {"H0_spectral", to_json(r.H0_spectral)},
                {"H_kdv_spectral", to_json(r.H_kdv_spectral)},
                {"H_kdv_direct", to_json(r.H_kdv_direct)},
                {"H_star", to_json(r.H_star)},
                {"residual", r.residual},
                {"n_cut", r.n_cut},
                {"tail_indicator", r.tail_indicator},
                {"tail_bound", r.tail_bound},
                {"gaps", gaps}};
}

inline std::string actions_csv(const HamiltonianReport& r, const HillSpectra& sp) {
    CsvTable t({"n", "gamma_re", "gamma_im", "tau_re", "tau_im", "mu_re", "mu_im", "I_re", "I_im", "R_re", "R_im"});
    for (int n = 1; n <= r.n_cut; ++n) {
        t.row().add(n).add(sp.gap(n)).add(sp.mid(n)).add(sp.mu[n - 1]).add(r.I[n - 1]).add(r.R[n - 1]);
    }
    return t.str();
}

inline json f4_to_json(const F4Fit& f) {
    return json{{"H0_est", f.H0_est}, {"Hkdv_est", f.Hkdv_est}, {"c2", f.c2}, {"rms", f.rms}, {"samples", f.samples}};
}

inline json decay_to_json(const DecayReport& d) {
    json tails = json::array();
    for (const auto& t : d.tails) {
        json rows = json::array();
        for (const auto& r : t.rows) {
            rows.push_back({{"N", r.N},
                            {"T_gamma", r.T_gamma},
                            {"T_dirichlet", r.T_dirichlet},
                            {"coefficient_tail", r.coefficient_tail},
                            {"bound", r.bound},
                            {"holds", r.holds}});
        }
        tails.push_back({{"s", t.w.s},
                         {"p", t.w.p},
                         {"q_norm", t.q_norm},
                         {"C", t.C},
                         {"gamma_monotone", t.gamma_monotone},
                         {"dirichlet_monotone", t.dirichlet_monotone},
                         {"bound_holds", t.bound_holds},
                         {"rows", rows}});
    }
    return json{{"n_max", d.n_max},
                {"gamma_vs_q_slope", d.gamma_vs_q_slope},
                {"slope_points", d.slope_points},
                {"tails", tails}};
}

inline std::string decay_csv(const DecayReport& d) {
    CsvTable t({"n", "gamma_re", "gamma_im", "tau_minus_mu_re", "tau_minus_mu_im", "q_abs"});
    for (const auto& r : d.rows) t.row().add(r.n).add(r.gamma).add(r.tau_minus_mu).add(r.q_abs);
    return t.str();
}

inline json probe_point_to_json(const ProbePoint& p) {
    return json{{"a", p.a}, {"b", p.b}, {"I", p.I}, {"H_star", p.H_star}, {"residual", p.residual}};
}

inline json concavity_to_json(const ConcavityReport& r) {
    auto lad = [](const std::vector<ProbePoint>& v) {
        json a = json::array();
        for (const auto& p : v) a.push_back(probe_point_to_json(p));
        return a;
    };
    auto ex = [](const Extrapolation& e) {
        return json{{"value", e.value}, {"two_point", e.two_point}, {"uncertainty", e.uncertainty}};
    };
    return json{{"mode", r.mode},
                {"ladder", lad(r.ladder)},
                {"ratio", r.ratio},
                {"omega_ratio", r.omega_ratio},
                {"omega_I", r.omega_I},
                {"ratio_limit", ex(r.ratio_limit)},
                {"omega_limit", ex(r.omega_limit)},
                {"second_ladder", lad(r.second_ladder)},
                {"mixed_ladder", lad(r.mixed_ladder)},
                {"hessian", {{"d11", r.hess_11}, {"d12", r.hess_12}, {"d22", r.hess_22}}},
                {"strictly_negative", r.strictly_negative}};
}

inline std::string ladder_csv(const ConcavityReport& r) {
    CsvTable t({"a", "I_mode", "H_star", "ratio"});
    for (std::size_t i = 0; i < r.ladder.size(); ++i) {
        const auto& p = r.ladder[i];
        t.row().add(p.a).add(p.I.size() >= std::size_t(r.mode) ? p.I[r.mode - 1] : 0.0).add(p.H_star).add(r.ratio[i]);
    }
    return t.str();
}

inline json frequency_to_json(const FrequencyReport& f) {
    json rows = json::array();
    for (const auto& r : f.rows) {
        rows.push_back({{"n", r.n}, {"I_n", r.I_n}, {"omega", r.omega}, {"omega_over_I", r.omega_over_I}});
    }
    return json{{"rows", rows}, {"sup_omega", f.sup_omega}, {"bounded", f.bounded}};
}

} // namespace hillkdv
