#pragma once

#include "proloc/geo.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace proloc {

using DeviceId = std::uint32_t;

struct LocationReport {
  DeviceId device = 0;
  double t = 0.0; // epoch seconds
  GeoPoint pos;
};

struct Advert {
  DeviceId receiver = 0;
  DeviceId sender = 0;
  double t = 0.0;
  double upload_t = 0.0;
};

// Period of mutual co-location, timestamped at its midpoint.
struct Encounter {
  DeviceId peer_a = 0; // canonical order: peer_a < peer_b
  DeviceId peer_b = 0;
  double t_e = 0.0;
  bool timely = false;

  DeviceId other_peer(DeviceId d) const { return d == peer_a ? peer_b : peer_a; }
};

struct HistoryParams {
  double upload_deadline = 600.0;  // s; advert committed if upload_t - t <= deadline
  double min_duration = 300.0;     // s; minimum co-location period
  double gap_tolerance = 120.0;    // s; max gap between adverts within one period
};

// Derives encounters from the advert log: for each unordered device pair,
// maximal periods where adverts flow with gaps <= gap_tolerance, both
// directions are present, and the period spans >= min_duration. The period is
// timely if at least one side's advert stream for it met the upload deadline.
std::vector<Encounter> derive_encounters(std::vector<Advert> adverts,
                                         const HistoryParams& params);

// Device history database. Build-then-freeze: add records, call freeze(), then
// query. A frozen store is immutable and safe for concurrent readers.
class HistoryStore {
public:
  void add_report(const LocationReport& r);
  void add_advert(const Advert& a);
  void freeze(const HistoryParams& params = {});
  bool frozen() const { return frozen_; }

  bool has_device(DeviceId d) const;
  std::size_t device_count() const { return devices_.size(); }
  const std::vector<DeviceId>& devices() const { return devices_; }

  // Latest report with t_report <= t / earliest with t_report >= t. A report
  // exactly at t serves as both.
  std::optional<LocationReport> prev_location_report(DeviceId d, double t) const;
  std::optional<LocationReport> next_location_report(DeviceId d, double t) const;

  // Report of d with timestamp nearest to t (earlier wins ties).
  std::optional<LocationReport> nearest_location_report(DeviceId d, double t) const;

  // Timely encounters of d with |t_e - t| <= a.
  std::vector<Encounter> encounters_in_window(DeviceId d, double t, double a) const;

  const std::vector<Encounter>& encounters() const { return encounters_; }
  const std::vector<Advert>& adverts() const { return adverts_; }
  std::size_t report_count() const { return report_count_; }

private:
  void require_frozen() const;
  const std::vector<LocationReport>* reports_of(DeviceId d) const;

  bool frozen_ = false;
  std::size_t report_count_ = 0;
  std::unordered_map<DeviceId, std::vector<LocationReport>> reports_;
  std::vector<Advert> adverts_;
  std::vector<Encounter> encounters_;
  std::vector<DeviceId> devices_; // sorted
  // Per device: indices into encounters_, sorted by t_e.
  std::unordered_map<DeviceId, std::vector<std::uint32_t>> encounter_index_;
};

// JSON-Lines dataset format, one record per line:
//   {"kind":"loc","device":D,"t":T,"x":X,"y":Y}
//   {"kind":"advert","receiver":R,"sender":S,"t":T,"upload_t":U}
// Load order is normalized (sort by t, then device id) before ingestion.
HistoryStore load_history_jsonl(const std::string& path, const HistoryParams& params = {});
HistoryStore parse_history_jsonl(std::istream& in, const HistoryParams& params);
void write_history_jsonl(const std::string& path,
                         std::vector<LocationReport> reports,
                         std::vector<Advert> adverts);

} // namespace proloc
