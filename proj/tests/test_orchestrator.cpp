#include <doctest.h>

#include <chrono>
#include <random>

#include "lastmeter/error.hpp"
#include "lastmeter/orchestrator.hpp"
#include "test_support.hpp"

using namespace lastmeter;

namespace {

struct Harness {
  std::shared_ptr<World> world = test::fixture_world();
  Pose pose = test::kRampPose;
  SessionContext ctx;

  Harness() {
    ctx.user_id = "u1";
    ctx.graph = &world->graph;
    ctx.grid = &world->grid;
    ctx.store = &world->store;
    ctx.pose_provider = [this] { return pose; };
    ctx.ports = AgentPorts::stubs();
    ctx.now = 1000.0;
  }

  AgentReply ask(const std::string& q) { return handle_query(q, ctx); }
};

std::string repeat_word(const std::string& w, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + w;
  return out;
}

}  // namespace

TEST_SUITE("orchestrator") {
  TEST_CASE("intent examples") {
    Harness h;
    const Intent nav = resolve_intent("Please, guide me to the statue!", h.ctx);
    REQUIRE(std::holds_alternative<intent::Navigate>(nav));
    CHECK(std::get<intent::Navigate>(nav).target == intent::Navigate::Target::Class);
    CHECK(std::get<intent::Navigate>(nav).class_label == "statue");

    const Intent create = resolve_intent("Place an annotation here saying, 'Exit ahead'.", h.ctx);
    REQUIRE(std::holds_alternative<intent::AnnotationCreate>(create));
    CHECK(std::get<intent::AnnotationCreate>(create).text == "Exit ahead");
    CHECK(std::get<intent::AnnotationCreate>(create).anchor_hint == "here");

    const Intent del = resolve_intent("I want to delete the annotation about the exit", h.ctx);
    REQUIRE(std::holds_alternative<intent::AnnotationDelete>(del));
    CHECK(std::get<intent::AnnotationDelete>(del).ref == "exit");

    CHECK(intent_name(resolve_intent("Where am I?", h.ctx)) == "where_am_i");
    CHECK(intent_name(resolve_intent("What's around me?", h.ctx)) == "describe_surroundings");
    CHECK(intent_name(resolve_intent("How far is the nearest bench?", h.ctx)) == "object_query");
    CHECK(intent_name(resolve_intent("Are there any safety notes nearby?", h.ctx)) == "annotation_query");
    CHECK(intent_name(resolve_intent("Use steps instead of meters", h.ctx)) == "customize");
    CHECK(intent_name(resolve_intent("Repeat that", h.ctx)) == "repeat");
    CHECK(intent_name(resolve_intent("Is the bench in front of me free?", h.ctx)) == "visual_query");
    CHECK(intent_name(resolve_intent("Is there a cafe nearby?", h.ctx)) == "map_query");
    CHECK(intent_name(resolve_intent("When was the square built?", h.ctx)) == "web_query");
    CHECK(intent_name(resolve_intent("blorp", h.ctx)) == "unknown");
    CHECK(std::get<intent::Unknown>(resolve_intent("blorp", h.ctx)).raw == "blorp");
    // Store routing needs the word note/annotation; bare "attractions" goes to the map.
    CHECK(intent_name(resolve_intent("Any attraction notes?", h.ctx)) == "annotation_query");
    CHECK(intent_name(resolve_intent("Are there attractions nearby?", h.ctx)) == "map_query");
  }

  TEST_CASE("case and whitespace perturbations keep the variant") {
    Harness h;
    const std::vector<std::string> queries = {
        "Please, guide me to the statue!", "Where am I?", "What's around me?",
        "How many benches are there?", "Take me to the nearest bench", "Repeat that",
        "Place an annotation here saying, 'Exit ahead'.", "Show me the safety notes nearby",
        "Switch to clock directions", "Who is the statue of?"};
    std::mt19937_64 rng(21);
    std::bernoulli_distribution flip(0.5);
    for (const auto& q : queries) {
      const std::string base = intent_name(resolve_intent(q, h.ctx));
      for (int k = 0; k < 30; ++k) {
        std::string p;
        for (char c : q) {
          const char cc = flip(rng) ? static_cast<char>(std::toupper(static_cast<unsigned char>(c)))
                                    : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
          p += cc;
          if (c == ' ' && flip(rng)) p += "  ";
        }
        if (flip(rng)) p = "  " + p + " ";
        REQUIRE_MESSAGE(intent_name(resolve_intent(p, h.ctx)) == base, p);
      }
    }
  }

  TEST_CASE("verbosity budget") {
    const std::string s20 = repeat_word("word", 19) + " end.";
    const std::string three = s20 + " " + s20 + " " + s20;
    CHECK(apply_verbosity(three, 45) == s20 + " " + s20);
    const std::string long60 = repeat_word("word", 59) + " end.";
    CHECK(apply_verbosity(long60, 45) == long60);
    CHECK(apply_verbosity("", 45).empty());
    CHECK(kDefaultVerbosityWords == 45);
    CHECK(UserPrefs{}.verbosity_words == 45);
  }

  TEST_CASE("verbosity properties on random texts") {
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<int> nsent(0, 6), nword(1, 30), budget(10, 80);
    for (int i = 0; i < 1000; ++i) {
      std::vector<std::string> sents;
      std::string text;
      for (int k = nsent(rng); k > 0; --k) {
        sents.push_back(repeat_word("w" + std::to_string(k), nword(rng)) + " x.");
        text += (text.empty() ? "" : " ") + sents.back();
      }
      const int b = budget(rng);
      const std::string out = apply_verbosity(text, b);
      const std::size_t first = sents.empty() ? 0 : word_count(sents[0]);
      REQUIRE(word_count(out) <= std::max<std::size_t>(b, first));
      REQUIRE(apply_verbosity(out, b) == out);
      // Output is a prefix of the sentence sequence.
      REQUIRE(text.compare(0, out.size(), out) == 0);
    }
  }

  TEST_CASE("no reply ends with a question") {
    CHECK(without_trailing_question("Here you go. Would you like more?") ==
          "Here you go. Let me know if you would like more.");
    CHECK(without_trailing_question("All done.") == "All done.");
    Harness h;
    h.ctx.ports.web = std::make_shared<StubPort>("It was built in 1680. Do you want the full history?");
    const auto r = h.ask("When was the square built?");
    CHECK(r.text.back() != '?');
  }

  TEST_CASE("where am I and describe surroundings") {
    Harness h;
    h.pose = {{0, -3.6}, 0};
    const std::string where = h.ask("Where am I?").text;
    CHECK(where.find("golden square") != std::string::npos);
    CHECK(where.find("center") != std::string::npos);

    const std::string desc = describe_surroundings(h.ctx);
    CHECK(desc.find("statue at the center of a flower bed") != std::string::npos);
    CHECK(split_sentences(apply_verbosity(desc, 45)).size() >= 2);
    const std::string short_desc = h.ask("Describe my surroundings").text;
    CHECK(short_desc.find("statue") != std::string::npos);
    CHECK(word_count(short_desc) <= 45);

    CHECK(split_sentences(describe_surroundings(h.ctx, 0.01)).size() == 1);

    SessionContext empty;
    SceneGraph g = load_poi(nlohmann::json{{"poi_id", "e"},
                                           {"anchor", {{"lat", 0}, {"lon", 0}}},
                                           {"walkable", {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}},
                                           {"objects", nlohmann::json::array()}});
    empty.graph = &g;
    CHECK(describe_surroundings(empty) == "I don't have information about objects here yet.");
  }

  TEST_CASE("object queries") {
    Harness h;
    CHECK(h.ask("How many benches are there?").text == "There are twenty benches here.");
    CHECK(h.ask("Is the statue inside the flower bed?").text.rfind("Yes", 0) == 0);
    const std::string far = h.ask("How far is the ramp?").text;
    CHECK(far.find("ramp") != std::string::npos);
    CHECK(h.ask("Where is the unicorn?").text.find("unicorn") == std::string::npos);
  }

  TEST_CASE("navigate couples text with the start action") {
    Harness h;
    const auto r = h.ask("Please, guide me to the statue!");
    REQUIRE(r.actions.size() == 1);
    CHECK(r.actions[0].kind == Action::Kind::StartNavigation);
    CHECK(r.text.find("o'clock") != std::string::npos);
    CHECK(r.text.find("meters") != std::string::npos);
    const Route& route = r.actions[0].route;
    CHECK(route.waypoints.size() >= 2);
    // The statue sits inside the central bed, so the route ends at the bed.
    const SceneObject& bed = *h.world->graph.find("flower_bed_central");
    CHECK(bed.box.distance_to(route.waypoints.back()) < 0.6);

    h.pose = {{-11, 0}, 0};  // inside the west bed, nowhere to start
    for (const std::string q : {"Take me to the nearest bench", "Guide me to 3, 3"}) {
      const auto fail = h.ask(q);
      // Either guidance starts or an explicit failure sentence is given.
      if (fail.actions.empty()) {
        CHECK(fail.text.find("couldn't") != std::string::npos);
      } else {
        CHECK(fail.actions[0].kind == Action::Kind::StartNavigation);
      }
    }
  }

  TEST_CASE("navigate by annotation id and text") {
    Harness h;
    intent::Navigate nav;
    nav.target = intent::Navigate::Target::Annotation;
    nav.annotation_id = "21";
    nav.annotation_ref = "Ben";  // id wins
    const auto r = dispatch(nav, h.ctx);
    REQUIRE(r.actions.size() == 1);
    CHECK(distance(r.actions[0].route.waypoints.back(), {-14, 10.2}) < 0.3);

    const auto byname = h.ask("Take me to Emma's meeting point");
    REQUIRE(byname.actions.size() == 1);
    CHECK(distance(byname.actions[0].route.waypoints.back(), {-14, 10.2}) < 0.3);
  }

  TEST_CASE("customize then instructions render in steps") {
    Harness h;
    const auto r = h.ask("Please use steps instead of meters");
    REQUIRE(r.actions.size() == 1);
    CHECK(r.actions[0].kind == Action::Kind::ApplyPrefs);
    CHECK(h.ctx.prefs.unit.kind == DistanceUnit::Kind::Steps);
    const auto nav = h.ask("Guide me to the statue");
    CHECK(nav.text.find("steps") != std::string::npos);
    CHECK(nav.text.find("meters") == std::string::npos);

    h.ask("Mute the experience notes");
    CHECK(h.ctx.prefs.category_prefs.mode(Category::Experience) == AccessMode::Silent);
    h.ask("Set attraction notes to play automatically");
    CHECK(h.ctx.prefs.category_prefs.mode(Category::Attraction) == AccessMode::Auto);
    h.ask("Give me directions in degrees");
    CHECK(h.ctx.prefs.direction_format == DirectionFormat::EgocentricDegrees);
    h.ask("Keep answers to 20 words");
    CHECK(h.ctx.prefs.verbosity_words == 20);
  }

  TEST_CASE("repeat and memory") {
    Harness h;
    CHECK(h.ask("Repeat that").text == "I have nothing to repeat yet.");
    const auto first = h.ask("Where am I?");
    CHECK(h.ask("Say that again").text == first.text);
    for (int i = 0; i < 30; ++i) h.ask("Where am I?");
    CHECK(h.ctx.memory.size() == kChatMemoryTurns);
  }

  TEST_CASE("annotation CRUD through natural language") {
    Harness h;
    const std::size_t before = h.world->store.size();
    const auto c = h.ask("Place an annotation here saying, 'Exit ahead'.");
    REQUIRE(c.actions.size() == 1);
    CHECK(c.actions[0].mutation == "create");
    CHECK(h.world->store.size() == before + 1);
    const std::string id = c.actions[0].record.id;
    CHECK(h.world->store.get(id)->category == Category::Layout);
    CHECK(h.world->store.get(id)->anchor.point == test::kRampPose.position);

    h.ctx.now = 1001.0;
    const auto e = h.ask("Change the note about the exit to say Exit is closed today");
    REQUIRE(e.actions.size() == 1);
    CHECK(e.actions[0].mutation == "edit");
    CHECK(h.world->store.get(id)->text == "Exit is closed today");

    const auto d = h.ask("I want to delete the annotation about the exit");
    REQUIRE(d.actions.size() == 1);
    CHECK(d.actions[0].mutation == "delete");
    CHECK_FALSE(h.world->store.get(id));
    CHECK(h.world->store.size() == before);

    // Not the author: no action, no store change.
    const auto denied = h.ask("Delete the note about the stash");
    CHECK(denied.actions.empty());
    CHECK(h.world->store.size() == before);

    // Ambiguous reference asks for more words instead of guessing.
    const auto amb = h.ask("Delete the note about the podium");
    CHECK(amb.actions.empty());

    const auto on = h.ask("Add a note on the bench saying Nice shady spot");
    REQUIRE(on.actions.size() == 1);
    CHECK(on.actions[0].record.anchor.kind == AnnotationAnchor::Kind::Object);
  }

  TEST_CASE("every mutation action matches a store change") {
    Harness h;
    const std::vector<std::string> script = {
        "Place a note here saying Mind the puddle", "Place a note here saying Lovely roses",
        "Delete the note about the puddle", "Edit the note about roses to say Roses are gone",
        "Delete the note about the stash", "Delete the note about roses", "Delete the note about roses"};
    for (const auto& q : script) {
      const auto rev = h.world->store.revision();
      const auto r = h.ask(q);
      std::size_t mutations = 0;
      for (const auto& a : r.actions) mutations += a.kind == Action::Kind::AnnotationMutation;
      CHECK_MESSAGE((h.world->store.revision() != rev) == (mutations == 1), q);
    }
  }

  TEST_CASE("annotation queries") {
    Harness h;
    h.pose = {{0, -10}, 0};
    const auto r = h.ask("Are there any safety notes nearby?");
    CHECK(r.text.rfind("I found", 0) == 0);
    CHECK(h.ask("Read my notes").text == "I found no notes.");
  }

  TEST_CASE("recorded ports") {
    Harness h;
    h.ctx.ports.visual = RecordedPort::from_file(test::data_path("golden_square/ports/visual.json"));
    h.ctx.ports.web = RecordedPort::from_file(test::data_path("golden_square/ports/web.json"));
    h.ctx.ports.map = RecordedPort::from_file(test::data_path("golden_square/ports/map.json"));
    CHECK(h.ask("What color is the bench?").text == "The bench in front of you is dark green with wooden slats.");
    CHECK(h.ask("When was the square built?").text == "The square was laid out in the late 1600s.");
    CHECK(h.ask("Is there a cafe nearby?").text == "There is a cafe across the street on the north side.");
    CHECK_FALSE(h.ask("Is there a hotel nearby?").text.empty());
  }

  TEST_CASE("external port failure surfaces as PortUnavailable") {
    Harness h;
    h.ctx.ports.map = std::make_shared<ExternalMapPort>("127.0.0.1", 1, "/nearby", 0.5);
    try {
      h.ask("Is there a cafe nearby?");
      FAIL("expected PortUnavailable");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::PortUnavailable);
    }
  }

  TEST_CASE("stub intent matrix is fast") {
    Harness h;
    const std::vector<std::string> queries = {
        "Where am I?", "What's around me?", "How many benches are there?", "Guide me to the statue",
        "Show me safety notes nearby", "Use meters", "Repeat that", "Is the bench free?",
        "When was the square built?", "Is there a cafe nearby?", "blorp"};
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& q : queries) h.ask(q);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    CHECK(ms / queries.size() < 10.0);
  }
}
