#include "bidgen/dataset.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "bidgen/errors.hpp"
#include "bidgen/util.hpp"

namespace bidgen {
namespace {

using nlohmann::json;

json stats_to_json(const FeatureStats& fs, const ReturnStats& rs) {
  json j;
  j["feature_min"] = fs.min;
  j["feature_max"] = fs.max;
  j["r_min"] = rs.r_min;
  j["r_max"] = rs.r_max;
  return j;
}

json trajectory_to_json(const Trajectory& traj) {
  json steps = json::array();
  for (const auto& s : traj.steps) {
    steps.push_back(json::array(
        {s.state.to_array(), s.action.lambdas, s.reward, s.cost}));
  }
  json j;
  j["advertiser_id"] = traj.advertiser_id;
  j["episode_seed"] = traj.episode_seed;
  j["budget"] = traj.budget;
  j["constraint_bounds"] = traj.constraint_bounds;
  j["steps"] = std::move(steps);
  return j;
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory traj;
  traj.advertiser_id = j.at("advertiser_id").get<int>();
  traj.episode_seed = j.at("episode_seed").get<std::uint64_t>();
  traj.budget = j.at("budget").get<double>();
  traj.constraint_bounds = j.at("constraint_bounds").get<std::vector<double>>();
  for (const auto& js : j.at("steps")) {
    StepRecord rec;
    rec.state = BidState::from_array(js.at(0).get<std::array<double, BidState::kDim>>());
    rec.action.lambdas = js.at(1).get<std::vector<double>>();
    rec.reward = js.at(2).get<double>();
    rec.cost = js.at(3).get<double>();
    traj.steps.push_back(std::move(rec));
  }
  return traj;
}

std::string checksum_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

void dataset_save(const TrajectoryDataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::io_error, "cannot open '" + path + "' for writing");

  json header;
  header["format"] = kDatasetFormatTag;
  header["version"] = kDatasetVersion;
  header["n"] = ds.trajectories.size();
  header["stats"] = stats_to_json(ds.feature_stats, ds.return_stats);
  out << header.dump() << '\n';

  std::uint64_t checksum = 0xCBF29CE484222325ULL;
  for (const auto& traj : ds.trajectories) {
    const std::string line = trajectory_to_json(traj).dump();
    checksum = fnv1a64(line.data(), line.size(), checksum);
    out << line << '\n';
  }

  json footer;
  footer["records"] = ds.trajectories.size();
  footer["checksum"] = checksum_hex(checksum);
  out << footer.dump() << '\n';
  out.flush();
  if (!out) fail(Errc::io_error, "write failure on '" + path + "'");
}

TrajectoryDataset dataset_load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::io_error, "cannot open '" + path + "' for reading");

  std::string line;
  if (!std::getline(in, line)) fail(Errc::truncated_file, "missing header line");

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception&) {
    fail(Errc::truncated_file, "unparseable header line");
  }
  if (header.value("format", "") != kDatasetFormatTag)
    fail(Errc::version_mismatch, "not a dataset file: bad format tag");
  if (header.value("version", -1) != kDatasetVersion)
    fail(Errc::version_mismatch,
         "unsupported dataset version " + std::to_string(header.value("version", -1)));

  const auto expected_n = header.at("n").get<std::size_t>();

  TrajectoryDataset ds;
  ds.trajectories.reserve(expected_n);

  std::uint64_t checksum = 0xCBF29CE484222325ULL;
  bool saw_footer = false;
  std::uint64_t stored_checksum = 0;
  std::size_t stored_records = 0;

  while (std::getline(in, line)) {
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception&) {
      fail(Errc::truncated_file, "unparseable record line");
    }
    if (j.contains("checksum")) {
      saw_footer = true;
      stored_records = j.at("records").get<std::size_t>();
      stored_checksum = std::stoull(j.at("checksum").get<std::string>(), nullptr, 16);
      break;
    }
    try {
      ds.trajectories.push_back(trajectory_from_json(j));
    } catch (const json::exception&) {
      fail(Errc::truncated_file, "malformed trajectory record");
    }
    checksum = fnv1a64(line.data(), line.size(), checksum);
  }

  if (!saw_footer) fail(Errc::truncated_file, "missing footer line");
  if (stored_records != ds.trajectories.size() || ds.trajectories.size() != expected_n)
    fail(Errc::truncated_file, "record count mismatch");
  if (stored_checksum != checksum) fail(Errc::checksum_failure, "record checksum mismatch");

  const auto& stats = header.at("stats");
  ds.feature_stats.min = stats.at("feature_min").get<std::array<double, BidState::kDim>>();
  ds.feature_stats.max = stats.at("feature_max").get<std::array<double, BidState::kDim>>();
  ds.return_stats.r_min = stats.at("r_min").get<double>();
  ds.return_stats.r_max = stats.at("r_max").get<double>();

  if (!ds.trajectories.empty()) {
    const FeatureStats recomputed = FeatureStats::compute(ds.trajectories);
    if (!recomputed.approx_equal(ds.feature_stats, 1e-9))
      fail(Errc::stats_mismatch, "stored feature_stats disagree with records");
    const ReturnStats rr = ReturnStats::compute(ds.trajectories);
    if (std::abs(rr.r_min - ds.return_stats.r_min) > 1e-9 ||
        std::abs(rr.r_max - ds.return_stats.r_max) > 1e-9)
      fail(Errc::stats_mismatch, "stored return_stats disagree with records");
  }
  return ds;
}

}  // namespace bidgen
