#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "hillkdv/io.hpp"

using namespace hillkdv;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("hillkdv_io_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no exception";
    return ErrorKind::ConvergenceFailure;
}

} // namespace

TEST(Format, RoundTripAndSignedZero) {
    EXPECT_EQ(fmt(0.1), "0.10000000000000001");
    EXPECT_EQ(fmt(-0.0), "0");
    EXPECT_EQ(std::stod(fmt(pi)), pi);
    EXPECT_EQ(to_json(cd(-0.0, -0.0)).dump(), R"({"im":0.0,"re":0.0})");
    EXPECT_EQ(complex_from_json(json(2.5)), cd(2.5));
    EXPECT_EQ(complex_from_json(json{{"re", 1.0}}), cd(1.0));
}

TEST(Csv, ComplexColumnsSplit) {
    CsvTable t({"n", "z_re", "z_im", "x"});
    t.row().add(1).add(cd(0.5, -2.0)).add(3.0);
    t.row().add(2).add(cd(-0.0, 0.0)).add(0.25);
    EXPECT_EQ(t.str(), "n,z_re,z_im,x\n1,0.5,-2,3\n2,0,0,0.25\n");
}

TEST(Toml, TablesArraysAndScalars) {
    const json j = parse_toml(R"(
# comment
galerkin_n = 32   # trailing
residual_tol = 1e-7
name = "x \"y\""
flag = true
ladder = [0.2, 0.1,
          0.05]

[potential.random]
seed = 7
amplitude = 0.1

[[weights]]
s = -0.5
p = 4

[[weights]]
s = 0.0
p = 2

[inline]
mode = { k = 1, re = 0.1 }
a.b = -3
)");
    EXPECT_EQ(j.at("galerkin_n").get<int>(), 32);
    EXPECT_DOUBLE_EQ(j.at("residual_tol").get<double>(), 1e-7);
    EXPECT_EQ(j.at("name").get<std::string>(), "x \"y\"");
    EXPECT_TRUE(j.at("flag").get<bool>());
    EXPECT_EQ(j.at("ladder").size(), 3u);
    EXPECT_EQ(j.at("potential").at("random").at("seed").get<int>(), 7);
    ASSERT_EQ(j.at("weights").size(), 2u);
    EXPECT_DOUBLE_EQ(j.at("weights")[0].at("s").get<double>(), -0.5);
    EXPECT_EQ(j.at("weights")[1].at("p").get<int>(), 2);
    EXPECT_DOUBLE_EQ(j.at("inline").at("mode").at("re").get<double>(), 0.1);
    EXPECT_EQ(j.at("inline").at("a").at("b").get<int>(), -3);
}

TEST(Toml, MalformedInputRejected) {
    EXPECT_EQ(kind_of([] { parse_toml("x = "); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { parse_toml("[unterminated"); }), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { parse_toml("s = \"open"); }), ErrorKind::InvalidConfig);
}

TEST(PotentialSpec, RealModesGetConjugatePartners) {
    const PotentialSpec spec = parse_potential_spec(json::parse(R"({"modes": [{"k": 2, "re": 0.1, "im": 0.2}]})"));
    const FourierPotential q = spec.build();
    EXPECT_TRUE(q.real());
    EXPECT_EQ(q.coeff(-2), cd(0.1, -0.2));
}

TEST(PotentialSpec, Errors) {
    EXPECT_EQ(kind_of([] { parse_potential_spec(json::parse(R"({"modes": [{"k": 0, "re": 1}]})")); }),
              ErrorKind::NonZeroMean);
    EXPECT_EQ(kind_of([] {
                  parse_potential_spec(json::parse(R"({"modes": [{"k": 1, "re": 1}, {"k": 1, "re": 2}]})"));
              }),
              ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { parse_potential_spec(json::parse(R"({"modes": [{"re": 1}]})")); }),
              ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] {
                  parse_potential_spec(json::parse(R"({"modes": [{"k": 1, "re": 1}, {"k": -1, "re": 2}]})")).build();
              }),
              ErrorKind::NotReal);
}

TEST(PotentialSpec, RandomMatchesGenerator) {
    const PotentialSpec spec = parse_potential_spec(
        json::parse(R"({"random": {"seed": 9, "alpha": 1.5, "count": 6, "amplitude": 0.2}})"));
    const FourierPotential a = spec.build(), b = random_potential(9, 1.5, 6, 0.2);
    EXPECT_EQ(a.coeffs(), b.coeffs());
}

TEST(PotentialSpec, JsonRoundTrip) {
    const FourierPotential q = random_potential(2, 1.0, 5, 0.3);
    const FourierPotential r = parse_potential_spec(potential_to_json(q)).build();
    EXPECT_EQ(q.coeffs(), r.coeffs());
}

TEST(Config, DefaultsAndOverrides) {
    const ExperimentConfig cfg = parse_config(json::parse(R"({
        "potential": {"modes": [{"k": 1, "re": 0.1}]},
        "galerkin_n": 48, "n_cut": 12, "weights": [{"s": -0.25, "p": 3}],
        "ladder": [0.4, 0.2, 0.1], "probe_mode": 2})"));
    EXPECT_EQ(cfg.galerkin_n, 48);
    EXPECT_EQ(cfg.product_m, 64);
    EXPECT_EQ(cfg.n_cut, 12);
    ASSERT_EQ(cfg.weights.size(), 1u);
    EXPECT_DOUBLE_EQ(cfg.weights[0].p, 3.0);
    EXPECT_EQ(cfg.ladder.size(), 3u);
    EXPECT_EQ(cfg.probe_mode, 2);
}

TEST(Config, TopLevelPotentialAndFile) {
    const fs::path d = scratch_dir("cfgfile");
    write_text(d / "pot.json", R"({"modes": [{"k": 3, "re": 0.02}]})");
    write_text(d / "cfg.toml", "potential_file = \"pot.json\"\nn_cut = 4\n");
    const ExperimentConfig cfg = load_config(d / "cfg.toml");
    EXPECT_EQ(cfg.potential.build().coeff(-3), cd(0.02));
    EXPECT_EQ(cfg.n_cut, 4);
    const ExperimentConfig top = parse_config(json::parse(R"({"modes": [{"k": 1, "re": 0.1}]})"));
    EXPECT_EQ(top.potential.build().coeff(1), cd(0.1));
}

TEST(Config, ValidationErrors) {
    auto bad = [](const char* text) { return kind_of([&] { parse_config(json::parse(text)); }); };
    EXPECT_EQ(bad(R"({"galerkin_n": 0})"), ErrorKind::InvalidConfig);
    EXPECT_EQ(bad(R"({"weights": [{"s": 0.5, "p": 2}]})"), ErrorKind::InvalidWeight);
    EXPECT_EQ(bad(R"({"weights": [{"s": 0, "p": 1}]})"), ErrorKind::InvalidWeight);
    EXPECT_EQ(bad(R"({"ladder": [0.1, 0.2, 0.3]})"), ErrorKind::InvalidConfig);
    EXPECT_EQ(bad(R"({"contour_nodes": 48})"), ErrorKind::InvalidConfig);
    EXPECT_EQ(bad(R"({"galerkin_n": "many"})"), ErrorKind::InvalidConfig);
    EXPECT_EQ(bad(R"({"n_cut": -1})"), ErrorKind::InvalidConfig);
    EXPECT_EQ(kind_of([] { load_config("/nonexistent/cfg.json"); }), ErrorKind::InvalidConfig);
}

TEST(Spectra, JsonRoundTripIsExact) {
    const FourierPotential q = random_potential(4, 1.0, 8, 0.3);
    const HillSpectra sp = hill_spectra(q, {32, 1e-6});
    const json j = json::parse(spectra_to_json(sp).dump());
    const HillSpectra back = spectra_from_json(j);
    EXPECT_EQ(back.n_max, sp.n_max);
    EXPECT_EQ(back.threshold, sp.threshold);
    EXPECT_EQ(back.lambda0_plus, sp.lambda0_plus);
    for (int n = 1; n <= sp.n_max; ++n) {
        EXPECT_EQ(back.minus(n), sp.minus(n));
        EXPECT_EQ(back.plus(n), sp.plus(n));
        EXPECT_EQ(back.mu[n - 1], sp.mu[n - 1]);
        EXPECT_EQ(back.gap(n), sp.gap(n));
        EXPECT_EQ(back.mid(n), sp.mid(n));
    }
    EXPECT_EQ(spectra_csv(back), spectra_csv(sp));
}

TEST(Spectra, TruncatedTableRejected) {
    const HillSpectra sp = hill_spectra(cosine_potential(0.1), {16, 1e-6});
    json j = spectra_to_json(sp);
    j["mu"].erase(j["mu"].size() - 1);
    EXPECT_EQ(kind_of([&] { spectra_from_json(j); }), ErrorKind::InvalidConfig);
    json k = spectra_to_json(sp);
    k.erase("pairs");
    EXPECT_EQ(kind_of([&] { spectra_from_json(k); }), ErrorKind::InvalidConfig);
}

TEST(Spectra, CsvLayout) {
    const HillSpectra sp = hill_spectra(make_potential({}, true), {8, 1e-6});
    const std::string csv = spectra_csv(sp);
    const auto first_nl = csv.find('\n');
    EXPECT_EQ(csv.substr(0, first_nl),
              "n,lambda_minus_re,lambda_minus_im,lambda_plus_re,lambda_plus_im,mu_re,mu_im,gamma_re,gamma_im,tau_re,"
              "tau_im,crit_re,crit_im");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), sp.n_max + 2);
}
