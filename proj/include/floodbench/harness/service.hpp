#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "floodbench/bootstrap/ablation.hpp"
#include "floodbench/harness/vote_store.hpp"
#include "floodbench/util/log.hpp"

namespace floodbench::harness {

namespace fs = std::filesystem;

struct PairImage {
  std::string model;
  fs::path image;  // absolute
};

struct EvalPair {
  std::string pair_id;
  PairImage candidate;
  PairImage alternative;

  std::string comparison() const { return candidate.model + " vs " + alternative.model; }
  bool has_model(const std::string& m) const { return m == candidate.model || m == alternative.model; }
};

struct PairSet {
  std::string prompt = "Which image looks more like an actual flood?";
  std::vector<EvalPair> pairs;

  const EvalPair* find(const std::string& id) const {
    for (const auto& p : pairs) {
      if (p.pair_id == id) return &p;
    }
    return nullptr;
  }
};

// `<dir>/pairs.json`:
//   {"prompt": "...", "pairs": [{"pair_id": "p1",
//     "candidate": {"model": "A", "image": "a/1.png"},
//     "alternative": {"model": "B", "image": "b/1.png"}}]}
// Image paths are relative to <dir>.
inline PairSet load_pairs(const fs::path& dir) {
  const auto path = dir / "pairs.json";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path.string());
  PairSet set;
  try {
    const auto j = nlohmann::json::parse(in);
    if (j.contains("prompt")) set.prompt = j.at("prompt").get<std::string>();
    std::set<std::string> ids;
    for (const auto& p : j.at("pairs")) {
      EvalPair e;
      e.pair_id = p.at("pair_id").get<std::string>();
      if (e.pair_id.empty() || e.pair_id.find('/') != std::string::npos) {
        throw SchemaError("pair id '" + e.pair_id + "' is empty or contains '/'");
      }
      if (!ids.insert(e.pair_id).second) throw SchemaError("duplicate pair id '" + e.pair_id + "'");
      for (auto [key, side] : {std::pair{"candidate", &e.candidate}, std::pair{"alternative", &e.alternative}}) {
        side->model = p.at(key).at("model").get<std::string>();
        side->image = dir / p.at(key).at("image").get<std::string>();
        if (side->model.empty() || side->model.find('/') != std::string::npos) {
          throw SchemaError(e.pair_id + ": model name '" + side->model + "' is empty or contains '/'");
        }
        if (!fs::is_regular_file(side->image)) throw SchemaError(e.pair_id + ": missing image " + side->image.string());
      }
      if (e.candidate.model == e.alternative.model) throw SchemaError(e.pair_id + ": both sides name the same model");
      set.pairs.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  if (set.pairs.empty()) throw EmptyDataset(path.string() + ": no pairs");
  return set;
}

struct ResultsSettings {
  double conf = 0.99;
  std::size_t n_resamples = 10'000;
  std::uint64_t seed = 0;
  std::size_t quota = 3;
};

// Preference of each candidate over its alternative, grouped by comparison.
// The service answers /api/results with exactly this function, so replaying
// a log offline gives the same numbers.
inline nlohmann::json compute_results(const PairSet& pairs, const std::vector<VoteRecord>& log,
                                      const ResultsSettings& s, unsigned threads = 1) {
  std::map<std::string, std::vector<Vote>> by_comparison;
  for (const auto& v : log) {
    const auto* p = pairs.find(v.pair_id);
    if (!p) continue;
    by_comparison[p->comparison()].push_back({v.pair_id, v.chosen_model() == p->candidate.model});
  }
  nlohmann::json rows = nlohmann::json::array();
  std::size_t k = 0;
  for (const auto& [name, votes] : by_comparison) {
    const auto r = preference_ci(votes, s.conf, s.n_resamples, derive_seed(s.seed, k++), threads);
    std::size_t for_candidate = 0;
    for (const auto& v : votes) for_candidate += v.chose_candidate;
    const auto sep = name.find(" vs ");
    rows.push_back({{"comparison", name},
                    {"candidate", name.substr(0, sep)},
                    {"alternative", name.substr(sep + 4)},
                    {"rate", r.rate},
                    {"ci_low", r.ci_low},
                    {"ci_high", r.ci_high},
                    {"n_votes", r.n_votes},
                    {"votes_for_candidate", for_candidate}});
  }
  return {{"comparisons", std::move(rows)},
          {"metadata",
           {{"resampling_unit", "vote"},
            {"conf", s.conf},
            {"n_resamples", s.n_resamples},
            {"seed", s.seed},
            {"quota_per_pair", s.quota},
            {"dedup_policy", "a rater may vote on any number of pairs but at most once per pair; "
                             "a repeated client nonce is stored once"},
            {"prompt", pairs.prompt}}}};
}

using Clock = std::function<std::chrono::steady_clock::time_point()>;

struct Assignment {
  const EvalPair* pair = nullptr;
  bool candidate_left = true;
  std::string left_model() const { return candidate_left ? pair->candidate.model : pair->alternative.model; }
  std::string right_model() const { return candidate_left ? pair->alternative.model : pair->candidate.model; }
};

enum class VoteOutcome { Stored, Duplicate, BadRequest, Conflict };

struct VoteResult {
  VoteOutcome outcome;
  std::string reason;
};

// Pair scheduling and vote admission. A pair is handed out while its stored
// votes plus live reservations are below the quota, and never to a rater who
// already voted on it. A reservation lasts `lease` and is renewed when the
// same rater asks again. Votes are checked against the quota itself, so the
// quota holds even when leases expire.
class Scheduler {
 public:
  Scheduler(const PairSet& pairs, VoteLog& log, std::size_t quota, std::uint64_t seed,
            std::chrono::seconds lease, Clock clock)
      : pairs_(pairs), log_(log), quota_(quota), rng_(seed), lease_(lease), clock_(std::move(clock)) {
    if (quota_ == 0) throw InvalidValue("votes-per-pair quota must be positive");
    for (const auto& v : log_.records()) admit_replayed(v);
  }

  enum class NextStatus { Assigned, Exhausted, Busy };
  struct Next {
    NextStatus status;
    Assignment assignment;
  };

  Next next(const std::string& rater) {
    std::lock_guard lock(mu_);
    const auto now = clock_();
    expire(now);
    if (auto it = reservations_.find(rater); it != reservations_.end()) {
      it->second.expires = now + lease_;
      return {NextStatus::Assigned, it->second.assignment};
    }
    const EvalPair* best = nullptr;
    std::size_t best_load = quota_;
    bool any_open = false;
    for (const auto& p : pairs_.pairs) {
      const auto& st = state_[p.pair_id];
      if (st.votes >= quota_ || st.raters.contains(rater)) continue;
      any_open = true;
      const std::size_t load = st.votes + st.reserved;
      if (load < best_load) {
        best = &p;
        best_load = load;
      }
    }
    if (!best) return {any_open ? NextStatus::Busy : NextStatus::Exhausted, {}};
    Assignment a{best, std::bernoulli_distribution(0.5)(rng_)};
    ++state_[best->pair_id].reserved;
    reservations_[rater] = {a, now + lease_};
    return {NextStatus::Assigned, a};
  }

  VoteResult vote(VoteRecord v) {
    const auto* p = pairs_.find(v.pair_id);
    if (!p) return {VoteOutcome::BadRequest, "unknown pair_id '" + v.pair_id + "'"};
    if (v.rater_id.empty()) return {VoteOutcome::BadRequest, "rater_id is empty"};
    if (!p->has_model(v.left_model) || !p->has_model(v.right_model) || v.left_model == v.right_model) {
      return {VoteOutcome::BadRequest, "left_model and right_model must be the two models of pair " + v.pair_id};
    }
    std::lock_guard lock(mu_);
    if (!v.nonce.empty() && nonces_.contains(v.nonce)) return {VoteOutcome::Duplicate, "nonce already recorded"};
    auto& st = state_[v.pair_id];
    if (st.raters.contains(v.rater_id)) return {VoteOutcome::Conflict, "rater already voted on this pair"};
    if (st.votes >= quota_) return {VoteOutcome::Conflict, "pair already has its quota of votes"};
    if (v.timestamp.empty()) v.timestamp = utc_now_iso8601();
    log_.append(v);
    ++st.votes;
    st.raters.insert(v.rater_id);
    if (!v.nonce.empty()) nonces_.insert(v.nonce);
    if (auto it = reservations_.find(v.rater_id);
        it != reservations_.end() && it->second.assignment.pair->pair_id == v.pair_id) {
      --st.reserved;
      reservations_.erase(it);
    }
    return {VoteOutcome::Stored, {}};
  }

  std::vector<VoteRecord> records() const {
    std::lock_guard lock(mu_);
    return log_.records();
  }

  std::size_t votes_for(const std::string& pair_id) const {
    std::lock_guard lock(mu_);
    const auto it = state_.find(pair_id);
    return it == state_.end() ? 0 : it->second.votes;
  }

  std::size_t quota() const { return quota_; }

 private:
  struct PairState {
    std::size_t votes = 0;
    std::size_t reserved = 0;
    std::set<std::string> raters;
  };
  struct Reservation {
    Assignment assignment;
    std::chrono::steady_clock::time_point expires;
  };

  void admit_replayed(const VoteRecord& v) {
    if (!pairs_.find(v.pair_id)) {
      util::logger().warn("vote log: pair '{}' is not in the pair set; ignored for scheduling", v.pair_id);
      return;
    }
    auto& st = state_[v.pair_id];
    ++st.votes;
    st.raters.insert(v.rater_id);
    if (!v.nonce.empty()) nonces_.insert(v.nonce);
  }

  void expire(std::chrono::steady_clock::time_point now) {
    for (auto it = reservations_.begin(); it != reservations_.end();) {
      if (it->second.expires <= now) {
        --state_[it->second.assignment.pair->pair_id].reserved;
        it = reservations_.erase(it);
      } else {
        ++it;
      }
    }
  }

  const PairSet& pairs_;
  VoteLog& log_;
  std::size_t quota_;
  std::mt19937_64 rng_;
  std::chrono::seconds lease_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<std::string, PairState> state_;
  std::map<std::string, Reservation> reservations_;
  std::set<std::string> nonces_;
};

struct ServiceConfig {
  fs::path pairs_dir;
  fs::path vote_log;
  std::optional<fs::path> static_dir;
  ResultsSettings results;
  std::uint64_t seed = 0;  // left/right presentation order
  std::chrono::seconds lease{600};
  Clock clock = [] { return std::chrono::steady_clock::now(); };
};

// HTTP front end of the human evaluation.
//   GET  /api/pairs/next?rater=ID   200 pair descriptor | 204 none left | 503 all open pairs leased
//   POST /api/votes                 200 stored or duplicate nonce | 400 malformed | 409 rater/quota conflict
//   GET  /api/results               preference per comparison
//   GET  /images/<pair_id>/<model>.png
//   GET  /healthz
class EvalService {
 public:
  explicit EvalService(ServiceConfig cfg)
      : cfg_(std::move(cfg)),
        pairs_(load_pairs(cfg_.pairs_dir)),
        log_(cfg_.vote_log),
        scheduler_(pairs_, log_, cfg_.results.quota, cfg_.seed, cfg_.lease, cfg_.clock) {
    routes();
  }

  httplib::Server& server() { return server_; }
  const PairSet& pairs() const { return pairs_; }
  Scheduler& scheduler() { return scheduler_; }

  nlohmann::json results() const { return compute_results(pairs_, scheduler_.records(), cfg_.results); }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_any(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }
  static void send_error(httplib::Response& res, int status, const std::string& reason) {
    send_json(res, status, {{"error", reason}});
  }

  void routes() {
    server_.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}, {"pairs", pairs_.pairs.size()}, {"votes", scheduler_.records().size()}});
    });

    server_.Get("/api/pairs/next", [this](const httplib::Request& req, httplib::Response& res) {
      const auto rater = req.get_param_value("rater");
      if (rater.empty()) return send_error(res, 400, "query parameter 'rater' is required");
      const auto next = scheduler_.next(rater);
      if (next.status == Scheduler::NextStatus::Exhausted) {
        res.status = 204;
        return;
      }
      if (next.status == Scheduler::NextStatus::Busy) {
        res.set_header("Retry-After", "5");
        return send_error(res, 503, "every open pair is reserved by another rater");
      }
      const auto& a = next.assignment;
      const auto& id = a.pair->pair_id;
      send_json(res, 200,
                {{"pair_id", id},
                 {"prompt", pairs_.prompt},
                 {"left", {{"model", a.left_model()}, {"image_url", "/images/" + id + "/" + a.left_model() + ".png"}}},
                 {"right", {{"model", a.right_model()}, {"image_url", "/images/" + id + "/" + a.right_model() + ".png"}}},
                 {"votes", scheduler_.votes_for(id)},
                 {"quota", scheduler_.quota()}});
    });

    server_.Post("/api/votes", [this](const httplib::Request& req, httplib::Response& res) {
      VoteRecord v;
      try {
        const auto j = nlohmann::json::parse(req.body);
        if (!j.is_object()) return send_error(res, 400, "body must be a JSON object");
        for (const char* key : {"pair_id", "rater_id", "left_model", "right_model", "choice"}) {
          if (!j.contains(key) || !j[key].is_string()) {
            return send_error(res, 400, std::string("field '") + key + "' must be a string");
          }
        }
        v.pair_id = j["pair_id"].get<std::string>();
        v.rater_id = j["rater_id"].get<std::string>();
        v.left_model = j["left_model"].get<std::string>();
        v.right_model = j["right_model"].get<std::string>();
        const auto choice = j["choice"].get<std::string>();
        if (choice == "left") v.choice = Choice::Left;
        else if (choice == "right") v.choice = Choice::Right;
        else return send_error(res, 400, "choice must be 'left' or 'right'");
        if (j.contains("nonce")) {
          if (!j["nonce"].is_string()) return send_error(res, 400, "nonce must be a string");
          v.nonce = j["nonce"].get<std::string>();
        }
      } catch (const nlohmann::json::exception& e) {
        return send_error(res, 400, std::string("malformed JSON: ") + e.what());
      }
      const auto r = scheduler_.vote(std::move(v));
      switch (r.outcome) {
        case VoteOutcome::Stored: return send_json(res, 200, {{"status", "stored"}});
        case VoteOutcome::Duplicate: return send_json(res, 200, {{"status", "duplicate"}});
        case VoteOutcome::BadRequest: return send_error(res, 400, r.reason);
        case VoteOutcome::Conflict: return send_error(res, 409, r.reason);
      }
    });

    server_.Get("/api/results", [this](const httplib::Request&, httplib::Response& res) {
      try {
        send_json(res, 200, results());
      } catch (const Error& e) {
        send_error(res, 500, e.what());
      }
    });

    server_.Get(R"(/images/([^/]+)/([^/]+)\.png)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto* p = pairs_.find(req.matches[1]);
      const std::string model = req.matches[2];
      if (!p || !p->has_model(model)) return send_error(res, 404, "no such image");
      const auto& path = model == p->candidate.model ? p->candidate.image : p->alternative.image;
      std::ifstream in(path, std::ios::binary);
      if (!in) return send_error(res, 404, "image unreadable");
      std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
      res.set_header("Cache-Control", "public, max-age=31536000, immutable");
      res.set_content(std::move(bytes), "image/png");
    });

    if (cfg_.static_dir && !server_.set_mount_point("/", cfg_.static_dir->string())) {
      throw UsageError("static directory " + cfg_.static_dir->string() + " does not exist");
    }
  }

  ServiceConfig cfg_;
  PairSet pairs_;
  VoteLog log_;
  Scheduler scheduler_;
  httplib::Server server_;
};

}  // namespace floodbench::harness
