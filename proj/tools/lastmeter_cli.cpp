// Operator CLI: plan, sim, replay, serve, annotate, classify, validate.
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "lastmeter/annotations.hpp"
#include "lastmeter/error.hpp"
#include "lastmeter/navgrid.hpp"
#include "lastmeter/scene_graph.hpp"
#include "lastmeter/server.hpp"
#include "lastmeter/sim.hpp"

using namespace lastmeter;
using nlohmann::json;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

std::atomic<bool> g_stop{false};

std::string data_dir() {
  if (const char* env = std::getenv("LASTMETER_DATA_DIR"); env && *env) return env;
#ifdef LASTMETER_DEFAULT_DATA_DIR
  return LASTMETER_DEFAULT_DATA_DIR;
#else
  return "data";
#endif
}

std::string default_poi() { return data_dir() + "/golden_square/poi.json"; }
std::string default_annotations() { return data_dir() + "/golden_square/annotations.jsonl"; }

bool is_validation(ErrorCode c) {
  switch (c) {
    case ErrorCode::SchemaError:
    case ErrorCode::ScenarioLoadError:
    case ErrorCode::GeometryError:
    case ErrorCode::DuplicateId:
    case ErrorCode::InvalidArgument:
    case ErrorCode::EmptyText:
    case ErrorCode::BadAnchor:
    case ErrorCode::GridTooLarge:
      return true;
    default:
      return false;
  }
}

std::vector<double> parse_numbers(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw Error(ErrorCode::InvalidArgument, what + ": expected comma-separated numbers");
    }
  }
  return out;
}

Point2 parse_point(const std::string& s, const std::string& what) {
  const auto v = parse_numbers(s, what);
  if (v.size() != 2) throw Error(ErrorCode::InvalidArgument, what + ": expected x,y");
  return {v[0], v[1]};
}

Pose parse_pose(const std::string& s, const std::string& what) {
  const auto v = parse_numbers(s, what);
  if (v.size() != 2 && v.size() != 3) throw Error(ErrorCode::InvalidArgument, what + ": expected x,y[,heading]");
  return {{v[0], v[1]}, v.size() == 3 ? normalize_deg(v[2]) : 0.0};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::SchemaError, "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
  out << content;
}

void print_report(const std::string& name, const RunReport& r, bool as_json) {
  if (as_json) {
    json j = to_json(r);
    if (!name.empty()) j["scenario"] = name;
    std::cout << j.dump() << "\n";
    return;
  }
  if (!name.empty()) std::cout << "scenario: " << name << "\n";
  std::cout << "success: " << (r.success ? "true" : "false") << "\n"
            << "engine_arrived: " << (r.engine_arrived ? "true" : "false") << "\n"
            << "end_reason: " << r.end_reason << "\n"
            << "elapsed_s: " << r.elapsed_s << "\n"
            << "path_length_m: " << r.path_length_m << "\n"
            << "final_goal_distance_m: " << r.final_goal_distance_m << "\n";
  std::cout << "events:";
  for (const auto& [k, v] : r.event_counts) std::cout << " " << k << "=" << v;
  std::cout << "\ntriggers:";
  for (const auto& t : r.triggers) std::cout << " " << t;
  std::cout << "\nlandmarks:";
  for (const auto& l : r.landmarks) std::cout << " " << l;
  std::cout << "\n";
}

// Guesses a file's kind from its extension and top-level keys.
std::string detect_kind(const std::string& path) {
  if (std::filesystem::path(path).extension() == ".jsonl") return "annotations";
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::SchemaError, path + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("start")) return "scenario";
  return "poi";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lastmeter: last-few-meters guidance and annotation engine"};
  app.require_subcommand(1);
  std::string format = "human";
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"human", "json"}))
      ->capture_default_str();

  // plan
  auto* plan = app.add_subcommand("plan", "Plan a route and print it");
  std::string plan_poi = default_poi();
  std::string plan_from;
  std::string plan_to;
  std::string plan_class;
  plan->add_option("--poi", plan_poi, "POI file")->capture_default_str();
  plan->add_option("--from", plan_from, "Start pose x,y[,heading]")->required();
  auto* to_opt = plan->add_option("--to", plan_to, "Destination x,y");
  auto* class_opt = plan->add_option("--to-class", plan_class, "Destination object class");
  to_opt->excludes(class_opt);

  // sim
  auto* sim = app.add_subcommand("sim", "Run scenarios and print run reports");
  std::vector<std::string> scenarios;
  std::optional<std::uint64_t> seed;
  std::string transcript_path;
  std::string transcript_dir;
  unsigned jobs = 1;
  sim->add_option("--scenario", scenarios, "Scenario file (repeatable)")->required();
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--transcript", transcript_path, "Transcript output (single scenario)");
  sim->add_option("--transcript-dir", transcript_dir, "Directory for <name>.jsonl transcripts");
  sim->add_option("--jobs", jobs, "Parallel runs")->check(CLI::Range(1u, 64u));

  // replay
  auto* rep = app.add_subcommand("replay", "Recompute a run report from a transcript");
  std::string replay_path;
  rep->add_option("transcript", replay_path, "Transcript file")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "Start the HTTP/WebSocket session server");
  std::vector<std::string> serve_pois;
  std::string serve_ann;
  std::string serve_host = "127.0.0.1";
  unsigned short serve_port = 8080;
  serve->add_option("--poi", serve_pois, "POI file (repeatable)");
  serve->add_option("--annotations", serve_ann, "Annotations for the first POI");
  serve->add_option("--host", serve_host)->capture_default_str();
  serve->add_option("--port", serve_port, "0 picks a free port")->capture_default_str();

  // annotate
  auto* ann = app.add_subcommand("annotate", "Manage an annotation file");
  ann->require_subcommand(1);
  std::string ann_file = default_annotations();
  std::string ann_poi = default_poi();
  ann->add_option("--file", ann_file, "Annotation JSON Lines file")->capture_default_str();
  ann->add_option("--poi", ann_poi, "POI file for object anchors")->capture_default_str();
  std::string a_author;
  std::string a_text;
  std::string a_category;
  std::string a_point;
  std::string a_object;
  std::string a_id;
  double a_now = -1.0;
  auto* add = ann->add_subcommand("add", "Create an annotation");
  add->add_option("--author", a_author)->required();
  add->add_option("--text", a_text)->required();
  add->add_option("--category", a_category, "Pin a category instead of classifying");
  auto* pt = add->add_option("--point", a_point, "Anchor point x,y");
  auto* obj = add->add_option("--object", a_object, "Anchor object id");
  pt->excludes(obj);
  add->add_option("--time", a_now, "Timestamp (default: one past the newest record)");
  auto* edit = ann->add_subcommand("edit", "Edit an annotation's text");
  edit->add_option("--id", a_id)->required();
  edit->add_option("--author", a_author)->required();
  edit->add_option("--text", a_text)->required();
  edit->add_option("--time", a_now);
  auto* del = ann->add_subcommand("delete", "Delete an annotation");
  del->add_option("--id", a_id)->required();
  del->add_option("--author", a_author)->required();
  auto* list = ann->add_subcommand("list", "List annotations");
  list->add_option("--category", a_category);
  list->add_option("--author", a_author);

  // classify
  auto* cls = app.add_subcommand("classify", "Print a category for each input line");
  std::string cls_file;
  cls->add_option("--file", cls_file, "Input file (default stdin)");

  // validate
  auto* val = app.add_subcommand("validate", "Check POI, annotation or scenario files");
  std::vector<std::string> val_files;
  std::string val_kind = "auto";
  val->add_option("files", val_files)->required();
  val->add_option("--kind", val_kind)->check(CLI::IsMember({"auto", "poi", "annotations", "scenario"}));
  bool val_strict = false;
  val->add_flag("--strict", val_strict, "Reject unknown POI keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitValidation;
  }
  const bool as_json = format == "json";

  try {
    if (*plan) {
      const SceneGraph graph = load_poi_file(plan_poi);
      const NavGrid grid = build_grid(graph);
      const Pose from = parse_pose(plan_from, "--from");
      Point2 to;
      if (!plan_class.empty()) {
        const auto label = resolve_class(plan_class, graph);
        if (!label) throw Error(ErrorCode::NotFound, "no object class matches '" + plan_class + "'");
        const auto nearest = nearest_by_class(from, *label, graph);
        to = approach_point(graph, *nearest->object, from.position);
      } else if (!plan_to.empty()) {
        to = parse_point(plan_to, "--to");
      } else {
        throw Error(ErrorCode::InvalidArgument, "one of --to or --to-class is required");
      }
      const Route route = plan_route(graph, grid, from, to);
      if (as_json) {
        std::cout << to_json(route).dump() << "\n";
      } else {
        std::cout << "length_m: " << route.total_length_m << "\nturns: " << route.turning_points()
                  << "\nwaypoints:";
        for (Point2 p : route.waypoints) std::cout << " (" << p.x << ", " << p.y << ")";
        std::cout << "\n";
        for (const HapticSegment& h : route.haptic_segments) {
          std::cout << "haptic: segment " << h.segment_index << " follows " << h.object_id << " on the "
                    << h.side << "\n";
        }
      }
      return 0;
    }

    if (*sim) {
      if (!transcript_path.empty() && scenarios.size() != 1) {
        throw Error(ErrorCode::InvalidArgument, "--transcript needs exactly one --scenario");
      }
      std::vector<Scenario> loaded;
      for (const std::string& path : scenarios) {
        Scenario s = load_scenario(path);
        if (seed) {
          if (s.drift.kind == DriftModel::Kind::RandomWalk && s.drift.seed == s.seed) s.drift.seed = *seed;
          s.seed = *seed;
        }
        loaded.push_back(std::move(s));
      }
      std::vector<RunResult> results(loaded.size());
      std::vector<std::string> errors(loaded.size());
      std::vector<ErrorCode> codes(loaded.size(), ErrorCode::InvalidArgument);
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < loaded.size(); i = next++) {
          try {
            results[i] = run_scenario(loaded[i]);
          } catch (const Error& e) {
            errors[i] = e.what();
            codes[i] = e.code();
          }
        }
      };
      std::vector<std::thread> pool;
      const unsigned n = std::min<unsigned>(jobs, static_cast<unsigned>(loaded.size()));
      for (unsigned k = 1; k < n; ++k) pool.emplace_back(worker);
      worker();
      for (auto& t : pool) t.join();
      int rc = 0;
      for (std::size_t i = 0; i < loaded.size(); ++i) {
        if (!errors[i].empty()) {
          std::cerr << "error: " << scenarios[i] << ": " << errors[i] << "\n";
          rc = std::max(rc, is_validation(codes[i]) ? kExitValidation : kExitRuntime);
          continue;
        }
        const std::string jsonl = transcript_to_jsonl(results[i].transcript);
        if (!transcript_path.empty()) write_file(transcript_path, jsonl);
        if (!transcript_dir.empty()) {
          std::filesystem::create_directories(transcript_dir);
          write_file(transcript_dir + "/" + loaded[i].name + ".jsonl", jsonl);
        }
        print_report(loaded.size() > 1 ? loaded[i].name : "", results[i].report, as_json);
      }
      return rc;
    }

    if (*rep) {
      print_report("", replay(replay_path), as_json);
      return 0;
    }

    if (*serve) {
      if (serve_pois.empty()) {
        serve_pois.push_back(default_poi());
        if (serve_ann.empty()) serve_ann = default_annotations();
      }
      auto hub = std::make_shared<SessionHub>();
      for (std::size_t i = 0; i < serve_pois.size(); ++i) {
        hub->add_world(load_world(serve_pois[i], i == 0 ? serve_ann : std::string()));
      }
      Server server(hub, {serve_host, serve_port});
      server.start();
      std::cout << "listening on http://" << serve_host << ":" << server.bound_port()
                << " (WebSocket at /ws?poi=<id>&user_id=<name>)" << std::endl;
      std::signal(SIGINT, [](int) { g_stop = true; });
      std::signal(SIGTERM, [](int) { g_stop = true; });
      while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      return 0;
    }

    if (*ann) {
      const SceneGraph graph = load_poi_file(ann_poi);
      AnnotationStore store(&graph);
      if (std::filesystem::exists(ann_file)) store.load_jsonl(ann_file);
      double stamp = 0.0;
      for (const Annotation& a : store.all()) stamp = std::max({stamp, a.created_at, a.updated_at});
      const double now = a_now >= 0.0 ? a_now : std::floor(stamp) + 1.0;
      if (*add) {
        if (a_point.empty() && a_object.empty()) {
          throw Error(ErrorCode::InvalidArgument, "one of --point or --object is required");
        }
        const AnnotationAnchor anchor =
            a_object.empty() ? AnnotationAnchor::at(parse_point(a_point, "--point"))
                             : AnnotationAnchor::on(a_object);
        std::optional<Category> category;
        if (!a_category.empty()) {
          category = category_from_string(a_category);
          if (!category) throw Error(ErrorCode::InvalidArgument, "unknown category '" + a_category + "'");
        }
        const Annotation a = store.create(a_author, a_text, anchor, category, now);
        store.save_jsonl(ann_file);
        std::cout << (as_json ? to_json(a).dump() : "created " + a.id + " (" +
                                                        std::string(to_string(a.category)) + ")")
                  << "\n";
      } else if (*edit) {
        const Annotation a = store.edit(a_id, a_author, a_text, now);
        store.save_jsonl(ann_file);
        std::cout << (as_json ? to_json(a).dump() : "edited " + a.id + " (" +
                                                        std::string(to_string(a.category)) + ")")
                  << "\n";
      } else if (*del) {
        store.remove(a_id, a_author);
        store.save_jsonl(ann_file);
        std::cout << (as_json ? json{{"deleted", a_id}}.dump() : "deleted " + a_id) << "\n";
      } else {
        AnnotationFilter f;
        if (!a_category.empty()) {
          f.category = category_from_string(a_category);
          if (!f.category) throw Error(ErrorCode::InvalidArgument, "unknown category '" + a_category + "'");
        }
        if (!a_author.empty()) f.author_id = a_author;
        for (const Annotation& a : store.query(f)) {
          if (as_json) {
            std::cout << to_json(a).dump() << "\n";
          } else {
            std::cout << a.id << "\t" << to_string(a.category) << "\t" << a.author_id << "\t" << a.text
                      << "\n";
          }
        }
      }
      return 0;
    }

    if (*cls) {
      std::ifstream file;
      if (!cls_file.empty()) {
        file.open(cls_file);
        if (!file) throw Error(ErrorCode::InvalidArgument, "cannot open '" + cls_file + "'");
      }
      std::istream& in = cls_file.empty() ? std::cin : file;
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string cat(to_string(classify(line)));
        if (as_json) {
          std::cout << json{{"text", line}, {"category", cat}}.dump() << "\n";
        } else {
          std::cout << cat << "\n";
        }
      }
      return 0;
    }

    if (*val) {
      int rc = 0;
      for (const std::string& path : val_files) {
        try {
          const std::string kind = val_kind == "auto" ? detect_kind(path) : val_kind;
          if (kind == "poi") {
            std::vector<std::string> warnings;
            const SceneGraph g = load_poi_file(path, {val_strict}, &warnings);
            build_grid(g);
            for (const auto& w : warnings) std::cerr << "warning: " << path << ": " << w << "\n";
          } else if (kind == "annotations") {
            AnnotationStore store;
            store.load_jsonl(path);
          } else {
            const Scenario s = load_scenario(path);
            load_world(s.poi_path, s.annotations_path);
          }
          std::cout << "ok: " << path << " (" << kind << ")\n";
        } catch (const Error& e) {
          std::cerr << "invalid: " << path << ": " << e.what() << "\n";
          rc = kExitValidation;
        }
      }
      return rc;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return is_validation(e.code()) ? kExitValidation : kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
