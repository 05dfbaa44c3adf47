#include "aeye/eval.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "aeye/error.hpp"

namespace aeye {

using nlohmann::json;

void ConfusionAccumulator::add(const SemanticGrid& predicted, const SemanticGrid& truth) {
  if (predicted.rows() != truth.rows() || predicted.cols() != truth.cols()) {
    throw InputError("confusion: predicted " + std::to_string(predicted.rows()) + "x" +
                     std::to_string(predicted.cols()) + " vs truth " + std::to_string(truth.rows()) + "x" +
                     std::to_string(truth.cols()));
  }
  const auto p = predicted.cells();
  const auto t = truth.cells();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const std::size_t pi = index(p[i]);
    const std::size_t ti = index(t[i]);
    if (pi == ti) {
      ++tp_[pi];
    } else {
      ++fp_[pi];
      ++fn_[ti];
    }
  }
}

ConfusionAccumulator& ConfusionAccumulator::operator+=(const ConfusionAccumulator& other) noexcept {
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    tp_[k] += other.tp_[k];
    fp_[k] += other.fp_[k];
    fn_[k] += other.fn_[k];
  }
  return *this;
}

ConfusionAccumulator accumulate(ConfusionAccumulator conf, const SemanticGrid& predicted, const SemanticGrid& truth) {
  conf.add(predicted, truth);
  return conf;
}

std::optional<double> iou(const ConfusionAccumulator& conf, ClassId c) noexcept {
  if (!conf.present(c)) return std::nullopt;
  return static_cast<double>(conf.tp(c)) / static_cast<double>(conf.tp(c) + conf.fp(c) + conf.fn(c));
}

std::optional<double> miou(const ConfusionAccumulator& conf, std::span<const ClassId> classes) noexcept {
  double sum = 0.0;
  int n = 0;
  for (ClassId c : classes) {
    if (const auto v = iou(conf, c)) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / n;
}

std::optional<double> miou(const ConfusionAccumulator& conf) noexcept {
  std::array<ClassId, kNumClasses> all{};
  for (std::size_t k = 0; k < kNumClasses; ++k) all[k] = static_cast<ClassId>(k);
  return miou(conf, all);
}

ConfusionAccumulator evaluate_model(const PerceiverModel& model, const Dataset& test) {
  ConfusionAccumulator conf;
  for (const Scene& s : test.scenes) {
    for (const FrameSample& f : s.frames) conf.add(predict(model, f.appearance), f.label);
  }
  return conf;
}

void validate(const CampaignLog& log) {
  if (!(log.distance_km >= 0.0) || !(log.time_min >= 0.0)) throw InputError("campaign log: negative totals");
  double km = 0.0;
  double min = 0.0;
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    const CampaignEvent& e = log.events[i];
    if (e.odometer_km < km || e.time_min < min) {
      throw InputError("campaign log: event " + std::to_string(i) + " goes backwards");
    }
    if (e.odometer_km > log.distance_km || e.time_min > log.time_min) {
      throw InputError("campaign log: event " + std::to_string(i) + " lies beyond the totals");
    }
    km = e.odometer_km;
    min = e.time_min;
  }
}

namespace {

// Sample mean and standard deviation with the n - 1 denominator.
std::pair<double, double> sample_stats(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

CampaignStats campaign_stats(const CampaignLog& log) {
  validate(log);
  CampaignStats st;
  st.distance_km = log.distance_km;
  st.time_min = log.time_min;
  st.n_cc = log.events.size();
  std::vector<double> dkm;
  std::vector<double> dmin;
  double prev_km = 0.0;
  double prev_min = 0.0;
  for (const CampaignEvent& e : log.events) {
    dkm.push_back(e.odometer_km - prev_km);
    dmin.push_back(e.time_min - prev_min);
    prev_km = e.odometer_km;
    prev_min = e.time_min;
  }
  st.tail_km = log.distance_km - prev_km;
  st.tail_min = log.time_min - prev_min;
  if (st.n_cc < 2) {
    st.absent_reason = "need at least 2 corner cases for interval statistics, got " + std::to_string(st.n_cc);
    return st;
  }
  std::tie(st.mean_d_cc, st.std_d_cc) = sample_stats(dkm);
  std::tie(st.mean_t_cc, st.std_t_cc) = sample_stats(dmin);
  return st;
}

json to_json(const CampaignLog& log) {
  json events = json::array();
  for (const CampaignEvent& e : log.events) {
    events.push_back({{"odometer_km", e.odometer_km},
                      {"time_min", e.time_min},
                      {"cause", std::string(cause_name(e.cause))},
                      {"record_id", e.record_id}});
  }
  return {{"format", "aeye-campaign/1"},
          {"events", events},
          {"totals",
           {{"distance_km", log.distance_km},
            {"time_min", log.time_min},
            {"ticks", log.ticks},
            {"underfull_interventions", log.underfull_interventions},
            {"collisions", log.collisions}}}};
}

CampaignLog campaign_log_from_json(const json& j) {
  CampaignLog log;
  try {
    for (const json& je : j.at("events")) {
      CampaignEvent e;
      e.odometer_km = je.at("odometer_km").get<double>();
      e.time_min = je.at("time_min").get<double>();
      const auto cause = cause_from_name(je.at("cause").get<std::string>());
      if (!cause) throw InputError("campaign log: unknown cause " + je.at("cause").dump());
      e.cause = *cause;
      e.record_id = je.value("record_id", std::string{});
      log.events.push_back(std::move(e));
    }
    const json& t = j.at("totals");
    log.distance_km = t.at("distance_km").get<double>();
    log.time_min = t.at("time_min").get<double>();
    log.ticks = t.value("ticks", std::uint64_t{0});
    log.underfull_interventions = t.value("underfull_interventions", std::uint64_t{0});
    log.collisions = t.value("collisions", std::uint64_t{0});
  } catch (const json::exception& e) {
    throw InputError(std::string("campaign log: ") + e.what());
  }
  validate(log);
  return log;
}

json to_json(const CampaignStats& st) {
  json j = {{"distance_km", st.distance_km},
            {"time_min", st.time_min},
            {"n_cc", st.n_cc},
            {"mean_d_cc", optional_json(st.mean_d_cc)},
            {"std_d_cc", optional_json(st.std_d_cc)},
            {"mean_t_cc", optional_json(st.mean_t_cc)},
            {"std_t_cc", optional_json(st.std_t_cc)},
            {"tail_km", st.tail_km},
            {"tail_min", st.tail_min}};
  if (!st.absent_reason.empty()) j["absent_reason"] = st.absent_reason;
  return j;
}

SeedScores compare_models(const std::array<const PerceiverModel*, 3>& models, const Dataset& safety_critical,
                          const Dataset& natural, std::uint64_t seed) {
  if (safety_critical.frame_count() == 0) throw InputError("compare: safety-critical test set is empty");
  if (natural.frame_count() == 0) throw InputError("compare: natural test set is empty");
  SeedScores out;
  out.seed = seed;
  const std::array<const Dataset*, 2> tests = {&safety_critical, &natural};
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t t = 0; t < tests.size(); ++t) {
      const ConfusionAccumulator conf = evaluate_model(*models[m], *tests[t]);
      out.scores[m][t] = {iou(conf, ClassId::pedestrian), miou(conf)};
    }
  }
  return out;
}

ScoreCell CompareReport::mean(std::size_t model, std::size_t test) const {
  auto avg = [&](auto field) -> std::optional<double> {
    double sum = 0.0;
    int n = 0;
    for (const SeedScores& s : seeds) {
      if (const auto& v = s.scores[model][test].*field) {
        sum += *v;
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / n;
  };
  return {avg(&ScoreCell::pedestrian_iou), avg(&ScoreCell::miou)};
}

double CompareReport::pedestrian_mean_per_scene(std::size_t model) const {
  if (seeds.empty()) return 0.0;
  double sum = 0.0;
  for (const SeedScores& s : seeds) sum += s.pedestrian_mean_per_scene[model];
  return sum / static_cast<double>(seeds.size());
}

namespace {

std::string fmt(const std::optional<double>& v) {
  if (!v) return "     -";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%6.4f", *v);
  return buf;
}

}  // namespace

std::string to_text(const CompareReport& report) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %10s | %-17s | %-17s\n", "training set", "ped/scene", "safety-critical",
                "natural");
  os << line;
  std::snprintf(line, sizeof line, "%-20s %10s | %8s %8s | %8s %8s\n", "", "", "IoU_ped", "mIoU", "IoU_ped", "mIoU");
  os << line;
  auto row = [&](const std::string& label, double ped, const std::array<ScoreCell, 2>& cells) {
    std::snprintf(line, sizeof line, "%-20s %10.1f | %8s %8s | %8s %8s\n", label.c_str(), ped,
                  fmt(cells[0].pedestrian_iou).c_str(), fmt(cells[0].miou).c_str(),
                  fmt(cells[1].pedestrian_iou).c_str(), fmt(cells[1].miou).c_str());
    os << line;
  };
  for (const SeedScores& s : report.seeds) {
    os << "seed " << s.seed << "\n";
    for (std::size_t m = 0; m < kCompareModels.size(); ++m) {
      row(std::string("  ") + kCompareModels[m], s.pedestrian_mean_per_scene[m], s.scores[m]);
    }
  }
  os << "mean over " << report.seeds.size() << " seeds\n";
  for (std::size_t m = 0; m < kCompareModels.size(); ++m) {
    row(std::string("  ") + kCompareModels[m], report.pedestrian_mean_per_scene(m),
        {report.mean(m, 0), report.mean(m, 1)});
  }
  return os.str();
}

json to_json(const CompareReport& report) {
  auto cells_json = [](const std::array<ScoreCell, 2>& cells) {
    json j = json::object();
    for (std::size_t t = 0; t < kCompareTests.size(); ++t) {
      j[kCompareTests[t]] = {{"pedestrian_iou", optional_json(cells[t].pedestrian_iou)},
                             {"miou", optional_json(cells[t].miou)}};
    }
    return j;
  };
  json seeds = json::array();
  for (const SeedScores& s : report.seeds) {
    json models = json::object();
    for (std::size_t m = 0; m < kCompareModels.size(); ++m) {
      json cell = cells_json(s.scores[m]);
      cell["pedestrian_mean_per_scene"] = s.pedestrian_mean_per_scene[m];
      models[kCompareModels[m]] = std::move(cell);
    }
    seeds.push_back({{"seed", s.seed}, {"models", models}});
  }
  json mean = json::object();
  for (std::size_t m = 0; m < kCompareModels.size(); ++m) {
    json cell = cells_json({report.mean(m, 0), report.mean(m, 1)});
    cell["pedestrian_mean_per_scene"] = report.pedestrian_mean_per_scene(m);
    mean[kCompareModels[m]] = std::move(cell);
  }
  return {{"report", "aeye-eval/1"}, {"seeds", seeds}, {"mean", mean}};
}

}  // namespace aeye
