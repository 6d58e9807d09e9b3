#include "proloc/history.hpp"

#include "proloc/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace proloc {

namespace {

struct PairKey {
  DeviceId lo, hi;
  bool operator<(const PairKey& o) const {
    return lo != o.lo ? lo < o.lo : hi < o.hi;
  }
};

struct PairAdvert {
  double t;
  double upload_t;
  bool from_lo; // sender == lo
};

} // namespace

std::vector<Encounter> derive_encounters(std::vector<Advert> adverts,
                                         const HistoryParams& params) {
  std::map<PairKey, std::vector<PairAdvert>> by_pair;
  for (const Advert& a : adverts) {
    if (a.receiver == a.sender) continue;
    const PairKey key{std::min(a.receiver, a.sender), std::max(a.receiver, a.sender)};
    by_pair[key].push_back({a.t, a.upload_t, a.sender == key.lo});
  }

  std::vector<Encounter> out;
  for (auto& [key, stream] : by_pair) {
    std::sort(stream.begin(), stream.end(), [](const PairAdvert& x, const PairAdvert& y) {
      return x.t != y.t ? x.t < y.t : x.from_lo < y.from_lo;
    });
    std::size_t begin = 0;
    while (begin < stream.size()) {
      std::size_t end = begin + 1;
      while (end < stream.size() && stream[end].t - stream[end - 1].t <= params.gap_tolerance) {
        ++end;
      }
      const double t_first = stream[begin].t;
      const double t_last = stream[end - 1].t;
      bool any_lo = false, any_hi = false;
      // A side's stream is timely if all its adverts in the period met the
      // upload deadline; the encounter is usable if either side committed.
      bool lo_timely = true, hi_timely = true;
      for (std::size_t i = begin; i < end; ++i) {
        const PairAdvert& a = stream[i];
        const bool ok = a.upload_t - a.t <= params.upload_deadline;
        if (a.from_lo) {
          any_hi = true; // hi received from lo
          hi_timely = hi_timely && ok;
        } else {
          any_lo = true;
          lo_timely = lo_timely && ok;
        }
      }
      if (any_lo && any_hi && t_last - t_first >= params.min_duration) {
        Encounter e;
        e.peer_a = key.lo;
        e.peer_b = key.hi;
        e.t_e = (t_first + t_last) / 2.0;
        e.timely = (any_lo && lo_timely) || (any_hi && hi_timely);
        out.push_back(e);
      }
      begin = end;
    }
  }
  std::sort(out.begin(), out.end(), [](const Encounter& a, const Encounter& b) {
    if (a.t_e != b.t_e) return a.t_e < b.t_e;
    if (a.peer_a != b.peer_a) return a.peer_a < b.peer_a;
    return a.peer_b < b.peer_b;
  });
  return out;
}

void HistoryStore::add_report(const LocationReport& r) {
  if (frozen_) fail(ErrorCode::invalid_argument, "store is frozen");
  if (!std::isfinite(r.t) || !std::isfinite(r.pos.x) || !std::isfinite(r.pos.y)) {
    fail(ErrorCode::invalid_argument, "location report fields must be finite");
  }
  reports_[r.device].push_back(r);
  ++report_count_;
}

void HistoryStore::add_advert(const Advert& a) {
  if (frozen_) fail(ErrorCode::invalid_argument, "store is frozen");
  if (a.receiver == a.sender) {
    fail(ErrorCode::invalid_argument, "advert receiver must differ from sender");
  }
  if (a.upload_t < a.t) {
    fail(ErrorCode::invalid_argument, "advert upload_t must be >= t");
  }
  adverts_.push_back(a);
}

void HistoryStore::freeze(const HistoryParams& params) {
  if (frozen_) return;
  for (auto& [d, reps] : reports_) {
    std::sort(reps.begin(), reps.end(), [](const LocationReport& a, const LocationReport& b) {
      return a.t < b.t;
    });
    for (std::size_t i = 1; i < reps.size(); ++i) {
      if (!(reps[i - 1].t < reps[i].t)) {
        fail(ErrorCode::invalid_argument,
             "per-device reports must be strictly increasing in t (device " +
                 std::to_string(d) + ")");
      }
    }
  }
  std::sort(adverts_.begin(), adverts_.end(), [](const Advert& a, const Advert& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.receiver != b.receiver) return a.receiver < b.receiver;
    return a.sender < b.sender;
  });

  encounters_ = derive_encounters(adverts_, params);
  for (std::uint32_t i = 0; i < encounters_.size(); ++i) {
    encounter_index_[encounters_[i].peer_a].push_back(i);
    encounter_index_[encounters_[i].peer_b].push_back(i);
  }

  for (const auto& [d, _] : reports_) devices_.push_back(d);
  for (const Advert& a : adverts_) {
    devices_.push_back(a.receiver);
    devices_.push_back(a.sender);
  }
  std::sort(devices_.begin(), devices_.end());
  devices_.erase(std::unique(devices_.begin(), devices_.end()), devices_.end());

  frozen_ = true;
}

void HistoryStore::require_frozen() const {
  if (!frozen_) fail(ErrorCode::invalid_argument, "store must be frozen before queries");
}

bool HistoryStore::has_device(DeviceId d) const {
  return std::binary_search(devices_.begin(), devices_.end(), d);
}

const std::vector<LocationReport>* HistoryStore::reports_of(DeviceId d) const {
  require_frozen();
  if (!has_device(d)) {
    fail(ErrorCode::unknown_device, "unknown device " + std::to_string(d));
  }
  auto it = reports_.find(d);
  return it == reports_.end() ? nullptr : &it->second;
}

std::optional<LocationReport> HistoryStore::prev_location_report(DeviceId d, double t) const {
  const auto* reps = reports_of(d);
  if (!reps || reps->empty()) return std::nullopt;
  auto it = std::upper_bound(reps->begin(), reps->end(), t,
                             [](double v, const LocationReport& r) { return v < r.t; });
  if (it == reps->begin()) return std::nullopt;
  return *std::prev(it);
}

std::optional<LocationReport> HistoryStore::next_location_report(DeviceId d, double t) const {
  const auto* reps = reports_of(d);
  if (!reps || reps->empty()) return std::nullopt;
  auto it = std::lower_bound(reps->begin(), reps->end(), t,
                             [](const LocationReport& r, double v) { return r.t < v; });
  if (it == reps->end()) return std::nullopt;
  return *it;
}

std::optional<LocationReport> HistoryStore::nearest_location_report(DeviceId d, double t) const {
  const auto prev = prev_location_report(d, t);
  const auto next = next_location_report(d, t);
  if (!prev) return next;
  if (!next) return prev;
  return (t - prev->t <= next->t - t) ? prev : next;
}

std::vector<Encounter> HistoryStore::encounters_in_window(DeviceId d, double t, double a) const {
  require_frozen();
  if (a < 0.0) fail(ErrorCode::invalid_argument, "window half-width must be >= 0");
  if (!has_device(d)) {
    fail(ErrorCode::unknown_device, "unknown device " + std::to_string(d));
  }
  std::vector<Encounter> out;
  auto it = encounter_index_.find(d);
  if (it == encounter_index_.end()) return out;
  for (std::uint32_t idx : it->second) {
    const Encounter& e = encounters_[idx];
    if (e.timely && std::abs(e.t_e - t) <= a) out.push_back(e);
  }
  return out;
}

HistoryStore parse_history_jsonl(std::istream& in, const HistoryParams& params) {
  std::vector<LocationReport> reports;
  std::vector<Advert> adverts;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "loc") {
        reports.push_back({j.at("device").get<DeviceId>(), j.at("t").get<double>(),
                           {j.at("x").get<double>(), j.at("y").get<double>()}});
      } else if (kind == "advert") {
        adverts.push_back({j.at("receiver").get<DeviceId>(), j.at("sender").get<DeviceId>(),
                           j.at("t").get<double>(), j.at("upload_t").get<double>()});
      } else {
        fail(ErrorCode::parse_error, "dataset line " + std::to_string(lineno) +
                                         ": unknown kind '" + kind + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error,
           "dataset line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::sort(reports.begin(), reports.end(), [](const LocationReport& a, const LocationReport& b) {
    return a.t != b.t ? a.t < b.t : a.device < b.device;
  });
  std::sort(adverts.begin(), adverts.end(), [](const Advert& a, const Advert& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.receiver != b.receiver) return a.receiver < b.receiver;
    return a.sender < b.sender;
  });
  HistoryStore store;
  for (const auto& r : reports) store.add_report(r);
  for (const auto& a : adverts) store.add_advert(a);
  store.freeze(params);
  return store;
}

HistoryStore load_history_jsonl(const std::string& path, const HistoryParams& params) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io_error, "cannot open dataset file: " + path);
  return parse_history_jsonl(in, params);
}

void write_history_jsonl(const std::string& path,
                         std::vector<LocationReport> reports,
                         std::vector<Advert> adverts) {
  std::sort(reports.begin(), reports.end(), [](const LocationReport& a, const LocationReport& b) {
    return a.t != b.t ? a.t < b.t : a.device < b.device;
  });
  std::sort(adverts.begin(), adverts.end(), [](const Advert& a, const Advert& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.receiver != b.receiver) return a.receiver < b.receiver;
    return a.sender < b.sender;
  });
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io_error, "cannot write dataset file: " + path);
  for (const auto& r : reports) {
    nlohmann::json j{{"kind", "loc"}, {"device", r.device}, {"t", r.t},
                     {"x", r.pos.x}, {"y", r.pos.y}};
    out << j.dump() << "\n";
  }
  for (const auto& a : adverts) {
    nlohmann::json j{{"kind", "advert"}, {"receiver", a.receiver}, {"sender", a.sender},
                     {"t", a.t}, {"upload_t", a.upload_t}};
    out << j.dump() << "\n";
  }
}

} // namespace proloc
