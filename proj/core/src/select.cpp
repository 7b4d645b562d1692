#include "pencrit/select.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pencrit/error.hpp"
#include "pencrit/log.hpp"

namespace pencrit {

PenaltySchedule PenaltySchedule::constant(double c) {
  if (!(c >= 0.0) || !std::isfinite(c)) throw InvalidArgument("const penalty needs a finite c >= 0");
  return {Kind::Constant, c, {}};
}

PenaltySchedule PenaltySchedule::loglog(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw InvalidArgument("loglog penalty needs a finite c > 0");
  return {Kind::LogLog, c, {}};
}

PenaltySchedule PenaltySchedule::log() { return {Kind::Log, 1.0, {}}; }

PenaltySchedule PenaltySchedule::sqrt() { return {Kind::Sqrt, 1.0, {}}; }

PenaltySchedule PenaltySchedule::custom(std::vector<std::pair<std::size_t, double>> table) {
  if (table.empty()) throw InvalidArgument("custom penalty table is empty");
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto [n, kappa] = table[i];
    if (n == 0) throw InvalidArgument("custom penalty table: n must be >= 1");
    if (i > 0 && n <= table[i - 1].first) throw InvalidArgument("custom penalty table: n must be strictly increasing");
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw InvalidArgument("custom penalty table: kappa at n = " + std::to_string(n) + " must be finite and >= 0");
    }
    if (kappa / static_cast<double>(n) > 0.5) {
      throw InvalidArgument("custom penalty table: kappa_n / n > 0.5 at n = " + std::to_string(n) +
                            " (kappa_n must be o(n))");
    }
  }
  const std::size_t tail = std::min<std::size_t>(10, table.size());
  if (tail >= 3) {
    bool nondecreasing = true;
    for (std::size_t i = table.size() - tail + 1; i < table.size(); ++i) {
      const double prev = table[i - 1].second / static_cast<double>(table[i - 1].first);
      const double cur = table[i].second / static_cast<double>(table[i].first);
      if (cur < prev) nondecreasing = false;
    }
    if (nondecreasing) logger().warn("custom penalty: kappa_n / n is nondecreasing over the last {} entries", tail);
  }
  return {Kind::Custom, 1.0, std::move(table)};
}

std::string PenaltySchedule::name() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Constant: os << "const:" << c; break;
    case Kind::LogLog: os << "loglog:" << c; break;
    case Kind::Log: os << "log"; break;
    case Kind::Sqrt: os << "sqrt"; break;
    case Kind::Custom: os << "custom"; break;
  }
  return os.str();
}

double penalty_value(const PenaltySchedule& sched, std::size_t n) {
  if (n < 1) throw InvalidArgument("penalty_value: n must be >= 1");
  const auto nd = static_cast<double>(n);
  switch (sched.kind) {
    case PenaltySchedule::Kind::Constant: return sched.c;
    case PenaltySchedule::Kind::LogLog:
      return sched.c * std::log(std::log(static_cast<double>(std::max(n, kLogLogGuard))));
    case PenaltySchedule::Kind::Log: return std::log(nd);
    case PenaltySchedule::Kind::Sqrt: return std::sqrt(nd);
    case PenaltySchedule::Kind::Custom: {
      if (sched.table.empty()) throw InvalidArgument("custom penalty table is empty");
      auto it = std::upper_bound(sched.table.begin(), sched.table.end(), n,
                                 [](std::size_t v, const auto& e) { return v < e.first; });
      if (it == sched.table.begin()) return sched.table.front().second;
      return std::prev(it)->second;
    }
  }
  return 0.0;
}

const CriterionRow& SelectionResult::winner_row() const {
  for (const auto& r : table) {
    if (!r.excluded && r.subset == winner) return r;
  }
  throw ComputationError("selection: winner row missing");
}

SelectionResult select_from_contrasts(const std::vector<CriterionRow>& rows, double kappa) {
  if (rows.empty()) throw InvalidArgument("select: candidate list is empty");
  SelectionResult out;
  out.kappa_used = kappa;
  out.table = rows;
  const CriterionRow* best = nullptr;
  for (auto& r : out.table) {
    r.penalty = kappa * static_cast<double>(r.subset.size());
    r.criterion = r.contrast_at_min + r.penalty;
    if (r.excluded) continue;
    if (best == nullptr || r.criterion < best->criterion) best = &r;
  }
  if (best == nullptr) throw ComputationError("select: every candidate fit failed");
  const double tol = 1e-12 * (1.0 + std::abs(best->criterion));
  std::vector<const CriterionRow*> tied;
  for (const auto& r : out.table) {
    if (!r.excluded && r.criterion <= best->criterion + tol) tied.push_back(&r);
  }
  const auto* winner = *std::min_element(tied.begin(), tied.end(),
                                         [](const CriterionRow* a, const CriterionRow* b) { return a->subset < b->subset; });
  out.winner = winner->subset;
  out.tie_broken = tied.size() > 1;
  return out;
}

SelectionResult select_model(const FamilySpec& spec, const Trajectory& traj, const std::vector<ModelSubset>& candidates,
                             const PenaltySchedule& sched, const OptimizerOptions& options,
                             std::vector<FitResult>* fits) {
  if (candidates.empty()) throw InvalidArgument("select_model: candidate list is empty");
  std::vector<CriterionRow> rows;
  rows.reserve(candidates.size());
  if (fits) fits->clear();
  for (const auto& m : candidates) {
    CriterionRow row;
    row.subset = m;
    try {
      FitResult fit = fit_mce(spec, traj, m, options);
      row.contrast_at_min = fit.contrast_at_min;
      if (fits) fits->push_back(std::move(fit));
    } catch (const ComputationError& e) {
      row.excluded = true;
      row.failure = e.what();
      logger().warn("select_model: candidate {} excluded: {}", m.to_string(), e.what());
    }
    rows.push_back(std::move(row));
  }
  return select_from_contrasts(rows, penalty_value(sched, traj.size()));
}

}  // namespace pencrit
