#include <doctest.h>

#include <cstdlib>
#include <fstream>

#include <json.hpp>

#include "cli_runner.hpp"
#include "test_support.hpp"

using namespace lastmeter;
using test::run_cli;

namespace {

std::string scenario(const std::string& name) { return test::data_path("golden_square/" + name + ".json"); }

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("sim twice gives byte-identical transcripts, replay agrees") {
    test::ScratchDir dir("cli_sim");
    for (const std::string name : {"emma", "ben", "emma_drift", "ramp_walk"}) {
      const auto a = run_cli("sim --scenario '" + scenario(name) + "' --transcript '" + dir.file("a.jsonl") + "'");
      const auto b = run_cli("sim --scenario '" + scenario(name) + "' --transcript '" + dir.file("b.jsonl") + "'");
      INFO(name << "\n" << a.out);
      REQUIRE(a.exit_code == 0);
      REQUIRE(b.exit_code == 0);
      CHECK(a.out == b.out);
      const std::string ta = test::slurp(dir.file("a.jsonl"));
      CHECK(!ta.empty());
      CHECK(ta == test::slurp(dir.file("b.jsonl")));
      const auto r = run_cli("replay '" + dir.file("a.jsonl") + "'");
      CHECK(r.exit_code == 0);
      CHECK(r.out == a.out);
    }
  }

  TEST_CASE("scenario transcripts match the goldens") {
    test::ScratchDir dir("cli_golden");
    const bool update = std::getenv("UPDATE_GOLDEN") && std::string(std::getenv("UPDATE_GOLDEN")) == "1";
    const std::string out_dir = update ? test::test_path("golden/transcripts") : dir.path.string();
    for (const std::string name : {"emma", "ben", "emma_drift", "ramp_walk"}) {
      REQUIRE(run_cli("sim --scenario '" + scenario(name) + "' --transcript-dir '" + out_dir + "'").exit_code == 0);
      INFO(name);
      CHECK(test::slurp(out_dir + "/" + name + ".jsonl") ==
            test::slurp(test::test_path("golden/transcripts/" + name + ".jsonl")));
    }
  }

  TEST_CASE("sim json report and seed override") {
    const auto r = run_cli("--format json sim --scenario '" + scenario("emma") + "'");
    REQUIRE(r.exit_code == 0);
    const auto j = nlohmann::json::parse(r.out);
    CHECK(j["success"] == true);
    CHECK(j["end_reason"] == "arrival");
    const auto s = run_cli("--format json sim --scenario '" + scenario("emma") + "' --seed 99");
    CHECK(s.exit_code == 0);
  }

  TEST_CASE("sim with several scenarios in parallel") {
    const auto one = run_cli("sim --jobs 1 --scenario '" + scenario("emma") + "' --scenario '" + scenario("ben") + "'");
    const auto four = run_cli("sim --jobs 4 --scenario '" + scenario("emma") + "' --scenario '" + scenario("ben") + "'");
    CHECK(one.exit_code == 0);
    CHECK(one.out == four.out);
  }

  TEST_CASE("classify") {
    test::ScratchDir dir("cli_cls");
    {
      std::ofstream(dir.file("in.txt")) << "Watch out for the table tennis table!\nIs there a handrail?\n";
    }
    const auto r = run_cli("classify --file '" + dir.file("in.txt") + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out == "safety\nrequest\n");
    const auto piped = run_cli("classify < '" + dir.file("in.txt") + "'");
    CHECK(piped.out == r.out);
  }

  TEST_CASE("validate") {
    const auto bad = run_cli("validate '" + test::test_path("data/bad_poi.json") + "'");
    CHECK(bad.exit_code == 2);
    CHECK(bad.out.find("$.objects[1].half_w") != std::string::npos);
    const auto good = run_cli("validate '" + test::data_path("golden_square/poi.json") + "' '" +
                              test::data_path("golden_square/annotations.jsonl") + "' '" + scenario("emma") + "'");
    CHECK(good.exit_code == 0);
    CHECK(good.out.find("(poi)") != std::string::npos);
    CHECK(good.out.find("(annotations)") != std::string::npos);
    CHECK(good.out.find("(scenario)") != std::string::npos);
  }

  TEST_CASE("plan") {
    const auto r = run_cli("plan --poi '" + test::data_path("golden_square/poi.json") + "' --from 0,-15.5 --to-class statue");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("length_m: 12.6256") != std::string::npos);
    const auto j = run_cli("--format json plan --poi '" + test::data_path("golden_square/poi.json") +
                           "' --from 0,-15.5 --to 0,15.5");
    REQUIRE(j.exit_code == 0);
    const auto route = nlohmann::json::parse(j.out);
    CHECK(route["waypoints"].size() >= 2);
    CHECK(run_cli("plan --from 0,-15.5").exit_code == 2);
    CHECK(run_cli("plan --from 0,-15.5 --to -11,0").exit_code != 0);
  }

  TEST_CASE("annotate add, edit, list, delete") {
    test::ScratchDir dir("cli_ann");
    const std::string f = "annotate --file '" + dir.file("notes.jsonl") + "' ";
    const auto add = run_cli(f + "add --author amy --text 'Watch out for the loose paving' --point 1,-10");
    REQUIRE(add.exit_code == 0);
    CHECK(add.out == "created 1 (safety)\n");
    CHECK(run_cli(f + "edit --id 1 --author bob --text x").exit_code != 0);
    CHECK(run_cli(f + "edit --id 1 --author amy --text 'Paving fixed'").exit_code == 0);
    const auto list = run_cli(f + "list");
    CHECK(list.out.find("Paving fixed") != std::string::npos);
    CHECK(run_cli(f + "delete --id 1 --author amy").exit_code == 0);
    CHECK(run_cli(f + "list").out.empty());
  }

  TEST_CASE("usage errors") {
    CHECK(run_cli("--no-such-flag").exit_code == 2);
    CHECK(run_cli("replay /nonexistent/file.jsonl").exit_code != 0);
  }
}
