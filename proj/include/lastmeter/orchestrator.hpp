#pragma once

#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "lastmeter/annotations.hpp"
#include "lastmeter/geometry.hpp"
#include "lastmeter/guidance.hpp"
#include "lastmeter/navgrid.hpp"
#include "lastmeter/prefs.hpp"
#include "lastmeter/scene_graph.hpp"

namespace lastmeter {

inline constexpr std::size_t kChatMemoryTurns = 20;
inline constexpr double kSurroundingsRadiusM = 10.0;

namespace intent {

struct WhereAmI {};
struct DescribeSurroundings {};
struct ObjectQuery {
  std::string class_label;
  std::string attribute;  // "where" | "distance" | "count" | "inside"
  std::string other_class;  // container class for "inside"
};
struct Navigate {
  enum class Target { Class, Annotation, Point };
  Target target = Target::Class;
  std::string class_label;
  int rank = 0;  // 0 nearest, 1 second nearest, -1 furthest
  std::string annotation_ref;  // text match
  std::string annotation_id;   // exact id, takes precedence
  Point2 point;
};
struct AnnotationQuery {
  AnnotationFilter filter;
};
struct AnnotationCreate {
  std::string text;
  std::string anchor_hint;  // "here" or a class label
};
struct AnnotationEdit {
  std::string ref;
  std::string new_text;
};
struct AnnotationDelete {
  std::string ref;
};
struct Customize {
  std::string setting;
  nlohmann::json value;
};
struct Repeat {};
struct VisualQuery {
  std::string question;
};
struct WebQuery {
  std::string question;
};
struct MapQuery {
  std::string question;
};
struct Unknown {
  std::string raw;
};

}  // namespace intent

using Intent =
    std::variant<intent::WhereAmI, intent::DescribeSurroundings, intent::ObjectQuery,
                 intent::Navigate, intent::AnnotationQuery, intent::AnnotationCreate,
                 intent::AnnotationEdit, intent::AnnotationDelete, intent::Customize,
                 intent::Repeat, intent::VisualQuery, intent::WebQuery, intent::MapQuery,
                 intent::Unknown>;

std::string intent_name(const Intent& i);

struct Action {
  enum class Kind { StartNavigation, ApplyPrefs, AnnotationMutation, Chime, Vibrate };
  Kind kind = Kind::Chime;
  Route route;
  std::string target_label;
  nlohmann::json prefs_delta;
  std::string mutation;  // "create" | "edit" | "delete"
  Annotation record;
  double duration_s = 0.0;
};

struct AgentReply {
  std::string text;
  std::vector<Action> actions;
};

struct PortContext {
  Pose pose;
  LatLon location;
  std::string poi_id;
};

// Backend for the visual, web and public-map agents.
class AgentPort {
 public:
  virtual ~AgentPort() = default;
  virtual std::string ask(const std::string& question, const PortContext& ctx) = 0;
};

class StubPort : public AgentPort {
 public:
  explicit StubPort(std::string canned) : canned_(std::move(canned)) {}
  std::string ask(const std::string&, const PortContext&) override { return canned_; }

 private:
  std::string canned_;
};

// Replays answers from a transcript file {"entries": {question: answer}}
// keyed by normalized question text.
class RecordedPort : public AgentPort {
 public:
  explicit RecordedPort(const nlohmann::json& transcript);
  static std::shared_ptr<RecordedPort> from_file(const std::string& path);
  std::string ask(const std::string& question, const PortContext& ctx) override;

 private:
  std::map<std::string, std::string> entries_;
};

// Public map backend over HTTP: GET <path>?lat=..&lon=..&radius=.. returning
// {"places":[{"name":..,"distance_m":..,"kind":..}]}.
class ExternalMapPort : public AgentPort {
 public:
  ExternalMapPort(std::string host, int port, std::string path = "/nearby",
                  double timeout_s = 2.0);
  std::string ask(const std::string& question, const PortContext& ctx) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  double timeout_s_;
};

// Question/answer backend over HTTP: POST <path> {"question",..} -> {"answer"}.
class ExternalTextPort : public AgentPort {
 public:
  ExternalTextPort(std::string host, int port, std::string path, double timeout_s = 2.0);
  std::string ask(const std::string& question, const PortContext& ctx) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
  double timeout_s_;
};

struct AgentPorts {
  std::shared_ptr<AgentPort> visual;
  std::shared_ptr<AgentPort> web;
  std::shared_ptr<AgentPort> map;

  static AgentPorts stubs();
};

struct ChatTurn {
  std::string query;
  std::string reply;
};

struct SessionContext {
  std::string user_id;
  const SceneGraph* graph = nullptr;
  const NavGrid* grid = nullptr;
  AnnotationStore* store = nullptr;
  std::function<Pose()> pose_provider;
  UserPrefs prefs;
  std::deque<ChatTurn> memory;
  AgentPorts ports;
  double now = 0.0;

  Pose pose() const { return pose_provider ? pose_provider() : Pose{}; }
  void remember(std::string query, std::string reply);
};

Intent resolve_intent(const std::string& text, const SessionContext& ctx);
AgentReply dispatch(const Intent& intent, SessionContext& ctx);

// resolve -> dispatch -> verbosity -> no trailing question -> memory.
AgentReply handle_query(const std::string& text, SessionContext& ctx);

std::string apply_verbosity(const std::string& text, int budget_words);
std::vector<std::string> split_sentences(const std::string& text);
std::size_t word_count(const std::string& text);

// Rewrites a reply whose last sentence is a question into a statement.
std::string without_trailing_question(const std::string& text);

std::string describe_surroundings(const SessionContext& ctx,
                                  double radius_m = kSurroundingsRadiusM);
std::string where_am_i(const SessionContext& ctx);

// "at 3 o'clock", "to your right", "30 degrees left", "to the north".
std::string place_phrase(double rel_bearing, const UserPrefs& prefs, double heading_deg);

nlohmann::json to_json(const Action& a);

}  // namespace lastmeter
