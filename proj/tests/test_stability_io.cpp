#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "doctest.h"
#include "kvnmd/io.hpp"
#include "kvnmd/pipeline.hpp"
#include "kvnmd/potential.hpp"
#include "kvnmd/stability.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& leaf) : path(fs::temp_directory_path() / leaf) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& rel = "") const {
        return rel.empty() ? path.string() : (path / rel).string();
    }
};

}  // namespace

TEST_CASE("window tail weight") {
    CHECK(kvnmd::tail_fraction(6.0) ==
          doctest::Approx(1.5229979744712628e-8).epsilon(1e-12));
    CHECK(kvnmd::tail_fraction(1.0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK_THROWS(kvnmd::tail_fraction(0.0));
    CHECK_THROWS(kvnmd::tail_fraction(-2.0));
}

TEST_CASE("configuration text parsing") {
    const std::string text =
        "# leading comment\n"
        "\n"
        "  nq = 32   # trailing comment\n"
        "dt=0.02\n"
        "label =  two words  \n"
        "dt = 0.05\n";  // later assignment wins
    const kvnmd::Config cfg = kvnmd::parse_config_text(text);
    CHECK(cfg.size() == 3);
    CHECK(cfg.at("nq") == "32");
    CHECK(cfg.at("dt") == "0.05");
    CHECK(cfg.at("label") == "two words");

    CHECK_THROWS(kvnmd::parse_config_text("just a bare token\n"));
    CHECK_THROWS(kvnmd::parse_config_text("= value-without-key\n"));
}

TEST_CASE("override application") {
    kvnmd::Config cfg = kvnmd::parse_config_text("a=1\nb=2\n");
    kvnmd::apply_overrides(cfg, {"b=20", "c = 3"});
    CHECK(cfg.at("a") == "1");
    CHECK(cfg.at("b") == "20");
    CHECK(cfg.at("c") == "3");
    CHECK_THROWS(kvnmd::apply_overrides(cfg, {"no-equals-sign"}));
}

TEST_CASE("typed accessors") {
    const kvnmd::Config cfg = kvnmd::parse_config_text(
        "x=2.5\nn=-7\ns=hello\nt1=true\nt2=yes\nt3=on\nt4=1\n"
        "f1=false\nf2=no\nf3=off\nf4=0\nbadnum=1.5x\nbadbool=maybe\n");
    CHECK(kvnmd::cfg_double(cfg, "x", 0.0) == 2.5);
    CHECK(kvnmd::cfg_double(cfg, "missing", 9.25) == 9.25);
    CHECK(kvnmd::cfg_int(cfg, "n", 0) == -7);
    CHECK(kvnmd::cfg_int(cfg, "missing", 42) == 42);
    CHECK(kvnmd::cfg_str(cfg, "s", "") == "hello");
    CHECK(kvnmd::cfg_str(cfg, "missing", "fb") == "fb");
    for (const char* k : {"t1", "t2", "t3", "t4"}) CHECK(kvnmd::cfg_bool(cfg, k, false));
    for (const char* k : {"f1", "f2", "f3", "f4"}) CHECK(!kvnmd::cfg_bool(cfg, k, true));
    CHECK(kvnmd::cfg_bool(cfg, "missing", true));

    CHECK_THROWS(kvnmd::cfg_double(cfg, "badnum", 0.0));
    CHECK_THROWS(kvnmd::cfg_int(cfg, "x", 0));  // "2.5" is not an integer
    CHECK_THROWS(kvnmd::cfg_bool(cfg, "badbool", false));
}

TEST_CASE("configuration hash is canonical") {
    const kvnmd::Config a = kvnmd::parse_config_text("x=1\ny=2\nz=3\n");
    const kvnmd::Config b = kvnmd::parse_config_text("z=3\nx=1\ny=2\n");
    CHECK(kvnmd::config_hash(a) == kvnmd::config_hash(b));

    kvnmd::Config c = a;
    c["y"] = "2.0";
    CHECK(kvnmd::config_hash(a) != kvnmd::config_hash(c));
}

TEST_CASE("shortest exact double formatting") {
    for (double v : {1.0 / 3.0, M_PI, 0.1, 1e300, std::numeric_limits<double>::min(),
                     std::numeric_limits<double>::max(), -12345.6789, 2.0, 0.0}) {
        const std::string s = kvnmd::format_g17(v);
        CHECK(std::stod(s) == v);
    }
    CHECK(kvnmd::format_g17(2.0) == "2");
}

TEST_CASE("csv writing") {
    TempDir tmp("kvnmd_test_csv");
    const std::string path = tmp.str("nested/deeper/table.csv");
    kvnmd::write_csv(path, {"t", "c"}, {{0.0, 1.0}, {0.5, 1.0 / 3.0}});
    const std::string got = kvnmd::read_text_file(path);
    CHECK(got == "t,c\n0,1\n0.5,0.33333333333333331\n");

    CHECK_THROWS(kvnmd::write_csv(tmp.str("bad.csv"), {"a", "b"}, {{1.0}}));
}

TEST_CASE("text file round trip") {
    TempDir tmp("kvnmd_test_txt");
    const std::string body = "line one\nline two\n# symbols =,\t done\n";
    kvnmd::write_text_file(tmp.str("t.txt"), body);
    CHECK(kvnmd::read_text_file(tmp.str("t.txt")) == body);
    CHECK_THROWS(kvnmd::read_text_file(tmp.str("absent.txt")));
}

TEST_CASE("single stability case diagnostics") {
    const kvnmd::PotentialModel model = kvnmd::PotentialModel::cosine(1.0);
    kvnmd::StepConfig cfg;
    cfg.t0 = 1.0;
    cfg.q_mass = 1.0;
    cfg.n_f = 1;

    kvnmd::StabilityCase sc;
    sc.n_q = 8;
    sc.n_p = 8;
    sc.n_xi = 4;
    sc.n_sigma_p = 4.0;
    sc.n_sigma_xi = 4.0;
    sc.dt = 0.05;
    sc.t_sim = 0.5;
    sc.record_stride = 2;

    const kvnmd::StabilityRow row = kvnmd::run_stability_case(model, cfg, sc);
    CHECK(row.norm_error < 1e-10);
    CHECK(row.final_overlap > 0.0);
    CHECK(row.final_overlap <= 1.0 + 1e-12);
    CHECK(row.max_temp_drift >= row.final_temp_drift);
    CHECK(row.scan.dt == sc.dt);

    kvnmd::StabilityCase bad = sc;
    bad.dt = 0.0;
    CHECK_THROWS(kvnmd::run_stability_case(model, cfg, bad));
    const auto two = kvnmd::PotentialModel::coupled_cosine(1.0, 0.5);
    CHECK_THROWS(kvnmd::run_stability_case(two, cfg, sc));
}

TEST_CASE("scan preserves case order") {
    const kvnmd::PotentialModel model = kvnmd::PotentialModel::cosine(1.0);
    kvnmd::StepConfig cfg;
    kvnmd::StabilityCase a;
    a.n_q = 8;
    a.n_p = 8;
    a.n_xi = 4;
    a.dt = 0.1;
    a.t_sim = 0.3;
    a.record_stride = 1;
    a.scan_param = 11.0;
    kvnmd::StabilityCase b = a;
    b.scan_param = 22.0;

    const auto rows = kvnmd::run_scan(model, cfg, {a, b});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].scan.scan_param == 11.0);
    CHECK(rows[1].scan.scan_param == 22.0);
}

TEST_CASE("default stability matrix") {
    const auto cases = kvnmd::default_stability_cases(60.0);
    CHECK(cases.size() == 14);  // 3 windows x 3 steps, 2 + 2 resolutions, 1 wide
    int n_window = 0, n_res_p = 0, n_res_xi = 0, n_wide = 0;
    for (const auto& c : cases) {
        CHECK(c.t_sim == 60.0);
        CHECK(c.dt > 0.0);
        CHECK(c.record_stride > 0);
        if (c.n_sigma_p == 8.0)
            ++n_wide;  // truncation-floor probe widens window and resolution
        else if (c.n_p != 32)
            ++n_res_p;
        else if (c.n_xi != 16)
            ++n_res_xi;
        else
            ++n_window;
    }
    CHECK(n_window == 9);
    CHECK(n_res_p == 2);
    CHECK(n_res_xi == 2);
    CHECK(n_wide == 1);
}

TEST_CASE("smoke validation battery passes") {
    for (const auto& c : kvnmd::run_validate()) {
        INFO(c.name, ": ", c.detail);
        CHECK(c.pass);
    }
}

TEST_CASE("experiment dispatch rejects malformed configurations") {
    CHECK_THROWS(kvnmd::run_experiment(kvnmd::parse_config_text("nq=8\n")));
    CHECK_THROWS(kvnmd::run_experiment(kvnmd::parse_config_text("experiment=warp\n")));
    CHECK_THROWS(
        kvnmd::run_experiment(kvnmd::parse_config_text("experiment=resources\nsteps=5\n")));
    CHECK_THROWS(
        kvnmd::run_experiment(kvnmd::parse_config_text("experiment=validate\nnq=8\n")));
}

TEST_CASE("gate-cost experiment writes identical artifacts on reruns") {
    TempDir ta("kvnmd_test_res_a"), tb("kvnmd_test_res_b");
    const std::string base =
        "experiment=resources\nn_totals=6,8\nn_ps=2,3\nnxi=2\nqsp=1\n";
    CHECK(kvnmd::run_experiment(kvnmd::parse_config_text(base + "out=" + ta.str() + "\n")) == 0);
    CHECK(kvnmd::run_experiment(kvnmd::parse_config_text(base + "out=" + tb.str() + "\n")) == 0);

    const std::string csv_a = kvnmd::read_text_file(ta.str("resources.csv"));
    CHECK(csv_a == kvnmd::read_text_file(tb.str("resources.csv")));
    CHECK(csv_a.rfind("n,model,cx_count\n", 0) == 0);
    CHECK(csv_a.find("qsp") != std::string::npos);
    CHECK(kvnmd::read_text_file(ta.str("qsp.json")) ==
          kvnmd::read_text_file(tb.str("qsp.json")));
    CHECK(fs::exists(ta.path / "metadata.json"));
}

TEST_CASE("correlation experiment writes its artifact set") {
    TempDir tmp("kvnmd_test_vacf");
    const std::string cfg_text =
        "experiment=vacf\nnq=8\nnp=8\nsteps=16\ndt=0.05\nout=" + tmp.str() + "\n";
    CHECK(kvnmd::run_experiment(kvnmd::parse_config_text(cfg_text)) == 0);
    CHECK(fs::exists(tmp.path / "cvv_nq8.csv"));
    CHECK(fs::exists(tmp.path / "metadata.json"));

    const std::string csv = kvnmd::read_text_file(tmp.str("cvv_nq8.csv"));
    CHECK(csv.rfind("t,c\n", 0) == 0);
    // first data row: t = 0 and a correlation normalized to one
    const auto row0 = csv.find("\n0,");
    REQUIRE(row0 != std::string::npos);
    CHECK(std::stod(csv.substr(row0 + 3)) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("stability experiment honours explicit scan lists") {
    TempDir tmp("kvnmd_test_stab");
    const std::string cfg_text =
        "experiment=stability\nnsigmas=3\ndts=0.1\nt_sim=0.3\nnq=8\nnp=8\nnxi=4\n"
        "stride=1\nout=" +
        tmp.str() + "\n";
    CHECK(kvnmd::run_experiment(kvnmd::parse_config_text(cfg_text)) == 0);
    const std::string scan = kvnmd::read_text_file(tmp.str("drift_scan.csv"));
    CHECK(scan.rfind("param,dt,delta_T\n", 0) == 0);
    const std::string row = "\n3," + kvnmd::format_g17(0.1) + ",";
    CHECK(scan.find(row) != std::string::npos);
    CHECK(fs::exists(tmp.path / "drift_scan_full.csv"));
}