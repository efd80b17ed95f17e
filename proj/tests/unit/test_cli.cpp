#include "cli.hpp"

#include "netanom/ensemble.hpp"
#include "netanom/util.hpp"

#include "doctest.h"
#include "json.hpp"
#include "test_support.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace netanom;
using netanom::cli::run_cli;
using nlohmann::json;

namespace {

json read_json(const std::string& path) {
    std::ifstream f(path);
    REQUIRE(f.good());
    return json::parse(f);
}

bool exists(const std::string& path) { return std::filesystem::exists(path); }

int synth_flows_cmd(const std::string& dir, const std::string& seed = "7") {
    return run_cli({"synth", "--mode", "flows", "--normal", "150", "--malicious", "60",
                    "--features", "5", "--separation", "3", "--seed", seed, "--out-dir", dir});
}

}  // namespace

TEST_CASE("synth dataset writes csv, sidecar, and summary") {
    testsup::TempDir dir;
    int rc = run_cli({"synth", "--normal", "30", "--malicious", "20", "--features", "3",
                      "--seed", "5", "--out-dir", dir.str()});
    CHECK(rc == 0);
    CHECK(exists(dir.file("dataset.csv")));
    CHECK(exists(dir.file("dataset.json")));
    CHECK(exists(dir.file("resolved_config.txt")));

    json summary = read_json(dir.file("summary.json"));
    CHECK(summary["command"] == "synth");
    CHECK(summary["mode"] == "dataset");
    CHECK(summary["rows"] == 50);
    CHECK(summary["cols"] == 4);  // 3 numerics + the nominal protocol column
    CHECK(summary["seed"] == 5);

    // the recorded hash fingerprints the snapshot file exactly
    std::string snapshot = testsup::read_text(dir.file("resolved_config.txt"));
    CHECK(summary["config_hash"] == fnv1a_hex(snapshot));
    CHECK(snapshot.find("synth.normal = 30\n") != std::string::npos);
    CHECK(snapshot.find("synth.mode = dataset\n") != std::string::npos);

    // same seed, fresh directory: byte-identical data
    testsup::TempDir dir2;
    CHECK(run_cli({"synth", "--normal", "30", "--malicious", "20", "--features", "3",
                   "--seed", "5", "--out-dir", dir2.str()}) == 0);
    CHECK(testsup::read_text(dir2.file("dataset.csv")) ==
          testsup::read_text(dir.file("dataset.csv")));

    testsup::TempDir dir3;
    CHECK(run_cli({"synth", "--normal", "30", "--malicious", "20", "--features", "3",
                   "--seed", "6", "--out-dir", dir3.str()}) == 0);
    CHECK(testsup::read_text(dir3.file("dataset.csv")) !=
          testsup::read_text(dir.file("dataset.csv")));
}

TEST_CASE("synth edges labels exactly the burst events") {
    testsup::TempDir dir;
    int rc = run_cli({"synth", "--mode", "edges", "--ticks", "40", "--rate", "5", "--nodes",
                      "10", "--bursts", "2", "--burst-size", "30", "--seed", "3", "--out-dir",
                      dir.str()});
    CHECK(rc == 0);
    CHECK(exists(dir.file("edges.csv")));
    json summary = read_json(dir.file("summary.json"));
    CHECK(summary["burst_events"] == 60);
    CHECK(summary["events"].get<std::int64_t>() > 60);

    std::string labels = testsup::read_text(dir.file("edge_labels.csv"));
    CHECK(labels.rfind("label\n", 0) == 0);
}

TEST_CASE("config file fills defaults and flags override it") {
    testsup::TempDir dir;
    const std::string cfg = dir.file("run.cfg");
    testsup::write_text(cfg,
                        "seed = 9\n"
                        "[synth]\n"
                        "normal = 5\n"
                        "malicious = 4\n"
                        "features = 2\n");
    int rc = run_cli({"synth", "--config", cfg, "--normal", "6", "--out-dir", dir.str()});
    CHECK(rc == 0);
    json summary = read_json(dir.file("summary.json"));
    CHECK(summary["rows"] == 10);  // flag 6 beats config 5; malicious 4 from config
    CHECK(summary["seed"] == 9);   // common-section key applies

    std::string snapshot = testsup::read_text(dir.file("resolved_config.txt"));
    CHECK(snapshot.find("synth.normal = 6\n") != std::string::npos);
    CHECK(snapshot.find("synth.malicious = 4\n") != std::string::npos);
    CHECK(snapshot.find("synth.seed = 9\n") != std::string::npos);
}

TEST_CASE("pipeline runs end to end from flows to reports") {
    testsup::TempDir pre, adv_dir, ens_dir, midas_dir, base_dir;
    testsup::TempDir flows;
    REQUIRE(synth_flows_cmd(flows.str()) == 0);
    REQUIRE(exists(flows.file("flows.csv")));
    REQUIRE(exists(flows.file("flows.schema")));

    // preprocess
    REQUIRE(run_cli({"preprocess", "--input", flows.file("flows.csv"), "--schema",
                     flows.file("flows.schema"), "--test-fraction", "0.3", "--seed", "7",
                     "--out-dir", pre.str()}) == 0);
    json psum = read_json(pre.file("summary.json"));
    CHECK(psum["rows_read"] == 210);
    CHECK(psum["rows_skipped"] == 0);
    CHECK(psum["train_rows"] == 147);
    CHECK(psum["test_rows"] == 63);
    CHECK(psum["features_selected"].get<int>() >= 2);
    CHECK(exists(pre.file("train.csv")));
    CHECK(exists(pre.file("test.csv")));
    CHECK(exists(pre.file("train.json")));

    // adversarial training sets from the standardized train split
    const json train_sidecar = read_json(pre.file("train.json"));
    REQUIRE(train_sidecar["feature_names"].size() >= 2);
    REQUIRE(run_cli({"gen-adv", "--train", pre.file("train.csv"), "--epsilon", "0.1",
                     "--features", "0,1", "--seed", "7", "--out-dir", adv_dir.str()}) == 0);
    json prov = read_json(adv_dir.file("provenance.json"));
    CHECK(prov["config"]["fraction"] == 0.2);  // default
    CHECK(prov["config"]["epsilon"] == 0.1);
    CHECK(prov["config"]["features"] == json({0, 1}));
    json asum = read_json(adv_dir.file("summary.json"));
    CHECK(asum["perturbed_rows"] == 30);  // ceil(0.2 * 147)
    CHECK(exists(adv_dir.file("t2.csv")));
    CHECK(exists(adv_dir.file("t3.csv")));

    // two-level ensemble
    REQUIRE(run_cli({"train-ensemble", "--t1", pre.file("train.csv"), "--t2",
                     adv_dir.file("t2.csv"), "--t3", adv_dir.file("t3.csv"), "--test",
                     pre.file("test.csv"), "--seed", "7", "--out-dir", ens_dir.str()}) == 0);
    json reports = read_json(ens_dir.file("reports.json"));
    CHECK(reports["level1"].size() == 3);
    CHECK(reports["level2"].size() == 3);
    CHECK(reports["level2_kind"] == "gaussian-nb");
    CHECK(reports["level1"][0]["model"] == "logistic-regression");
    CHECK(reports["level1"][1]["training_set"] == "T2");
    CHECK(reports["level2"][0]["metrics"]["auc"].get<double>() >= 0.7);
    for (const char* f : {"roc_t1.csv", "roc_t2.csv", "roc_t3.csv", "tables.txt"})
        CHECK(exists(ens_dir.file(f)));
    CHECK(testsup::read_text(ens_dir.file("tables.txt")).find("Level 2 training seconds") !=
          std::string::npos);

    ens::StackedEnsemble restored =
        ens::StackedEnsemble::from_json(read_json(ens_dir.file("ensemble.json")));
    CHECK(restored.level1.members.size() == 3);
    CHECK(restored.level2->fitted());

    json esum = read_json(ens_dir.file("summary.json"));
    CHECK(esum["malicious_f1"].size() == 3);
    CHECK(esum["oof"] == false);
    CHECK(esum["grid_searched"] == false);

    // streaming scores over the same flows, protocol-filtered
    REQUIRE(run_cli({"midas", "--flows", flows.file("flows.csv"), "--schema",
                     flows.file("flows.schema"), "--tick", "5", "--filter", "proto=dns",
                     "--seed", "7", "--out-dir", midas_dir.str()}) == 0);
    json msum = read_json(midas_dir.file("summary.json"));
    CHECK(msum["filter"] == "proto=dns");
    CHECK(msum["filtered_out"].get<int>() > 0);
    CHECK(msum["tick_seconds"] == 5.0);
    CHECK(msum["events"].get<int>() > 0);
    CHECK(exists(midas_dir.file("scores.csv")));

    // unsupervised baselines on the held-out split
    REQUIRE(run_cli({"baselines", "--input", pre.file("test.csv"), "--k", "3", "--trees", "50",
                     "--subsample", "32", "--seed", "7", "--out-dir", base_dir.str()}) == 0);
    json breports = read_json(base_dir.file("reports.json"));
    REQUIRE(breports["methods"].size() == 2);
    CHECK(breports["methods"][0]["name"] == "isolation_forest");
    CHECK(breports["methods"][0].contains("auc"));
    CHECK(breports["methods"][1]["name"] == "lof");
    CHECK(breports["methods"][1].contains("recall_at_quantile"));
    CHECK(exists(base_dir.file("iforest.csv")));
    CHECK(exists(base_dir.file("lof.csv")));
    CHECK(testsup::read_text(base_dir.file("iforest.csv")).rfind("row,score\n", 0) == 0);
}

TEST_CASE("midas scores labeled edges and reports auc") {
    testsup::TempDir edges_dir, out;
    REQUIRE(run_cli({"synth", "--mode", "edges", "--ticks", "50", "--rate", "8", "--nodes",
                     "12", "--bursts", "3", "--burst-size", "60", "--seed", "11", "--out-dir",
                     edges_dir.str()}) == 0);
    REQUIRE(run_cli({"midas", "--edges", edges_dir.file("edges.csv"), "--labels",
                     edges_dir.file("edge_labels.csv"), "--seed", "11", "--out-dir",
                     out.str()}) == 0);
    json summary = read_json(out.file("summary.json"));
    CHECK(summary["events"].get<int>() > 180);
    CHECK(summary["depth"] == 2);
    CHECK(summary["width"] == 1024);
    CHECK(summary["auc"].get<double>() > 0.8);
    CHECK(summary["max_score"].get<double>() > 0.0);
    CHECK_FALSE(summary.contains("tick_seconds"));

    std::string scores = testsup::read_text(out.file("scores.csv"));
    CHECK(scores.rfind("u,v,t,score\n", 0) == 0);
}

TEST_CASE("midas requires ordered ticks unless asked to sort") {
    testsup::TempDir dir;
    testsup::write_text(dir.file("edges.csv"), "u,v,t\na,b,2\na,b,1\na,b,3\n");
    CHECK(run_cli({"midas", "--edges", dir.file("edges.csv"), "--out-dir", dir.str()}) == 2);
    CHECK(run_cli({"midas", "--edges", dir.file("edges.csv"), "--sort", "--out-dir",
                   dir.str()}) == 0);
    json summary = read_json(dir.file("summary.json"));
    CHECK(summary["events"] == 3);
    CHECK(summary["ticks"] == 3);
}

TEST_CASE("usage errors exit with status 2") {
    testsup::TempDir dir;
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"bogus"}) == 2);
    CHECK(run_cli({"synth", "--nope", "3"}) == 2);
    CHECK(run_cli({"preprocess", "--out-dir", dir.str()}) == 2);  // missing required
    CHECK(run_cli({"synth", "--normal", "abc", "--out-dir", dir.str()}) == 2);
    CHECK(run_cli({"synth", "--threads", "0", "--out-dir", dir.str()}) == 2);
    CHECK(run_cli({"preprocess", "--input", dir.file("absent.csv"), "--schema",
                   dir.file("absent.schema"), "--out-dir", dir.str()}) == 2);
    CHECK(run_cli({"midas", "--edges", "a.csv", "--flows", "b.csv", "--out-dir", dir.str()}) ==
          2);
    CHECK(run_cli({"midas", "--out-dir", dir.str()}) == 2);
    CHECK(run_cli({"midas", "--edges", "a.csv", "--filter", "proto=dns", "--out-dir",
                   dir.str()}) == 2);
    CHECK(run_cli({"midas", "--flows", "f.csv", "--schema", "s", "--labels", "l.csv",
                   "--out-dir", dir.str()}) == 2);

    // config file problems
    const std::string unknown_key = dir.file("bad1.cfg");
    testsup::write_text(unknown_key, "[synth]\nbogus = 3\n");
    CHECK(run_cli({"synth", "--config", unknown_key, "--out-dir", dir.str()}) == 2);
    const std::string unknown_section = dir.file("bad2.cfg");
    testsup::write_text(unknown_section, "[nope]\nseed = 1\n");
    CHECK(run_cli({"synth", "--config", unknown_section, "--out-dir", dir.str()}) == 2);
    const std::string duplicate = dir.file("bad3.cfg");
    testsup::write_text(duplicate, "[synth]\nseed = 1\nseed = 2\n");
    CHECK(run_cli({"synth", "--config", duplicate, "--out-dir", dir.str()}) == 2);
    CHECK(run_cli({"synth", "--config", dir.file("absent.cfg"), "--out-dir", dir.str()}) == 2);
}

TEST_CASE("runtime failures exit with status 1") {
    testsup::TempDir dir;
    // schema and csv header disagree: a load-time failure, not a usage error
    testsup::write_text(dir.file("bad.schema"),
                        "stime timestamp keep\nbytes numeric keep\nlabel label keep\n");
    testsup::write_text(dir.file("bad.csv"), "stime,wrong,label\n1,2,0\n");
    CHECK(run_cli({"preprocess", "--input", dir.file("bad.csv"), "--schema",
                   dir.file("bad.schema"), "--out-dir", dir.str()}) == 1);
}

TEST_CASE("help requests exit cleanly") {
    CHECK(run_cli({"--help"}) == 0);
    CHECK(run_cli({"synth", "--help"}) == 0);
}
