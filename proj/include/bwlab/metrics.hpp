#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "bwlab/ensemble.hpp"

namespace bwlab {

// A ratio that is undefined when its denominator falls below the floor.
using Cell = std::optional<double>;
using CellTable = std::vector<std::vector<Cell>>;

struct BullwhipMetrics {
  double tau = 1e-9;
  Paths sigma2;          // [k = 0..n][t]
  CellTable psi;         // [k-1][t]: sigma2_k / sigma2_{k-1}, k = 1..n
  CellTable cumulative;  // [j-1][t]: prod_{k<=j} psi_k
  CellTable phi;         // [k][t]: sigma2_{k,t+1} / sigma2_{k,t}, k = 0..n, t < T-1
  CellTable classical;   // [run][k-1]: Var_t(q_k) / Var_t(q_{k-1}) within one run
};

Cell safe_ratio(double num, double den, double tau);

BullwhipMetrics bullwhip_metrics(const Paths& sigma2, double tau = 1e-9);
// Adds the per-run classical ratios computed over periods >= from.
BullwhipMetrics bullwhip_metrics(const EnsembleRecord& e, double tau = 1e-9, std::size_t from = 0);
CellTable classical_bullwhip(const EnsembleRecord& e, double tau = 1e-9, std::size_t from = 0);

// Median over periods >= from of sigma2_{k,t}, per row.
std::vector<double> median_over_time(const Paths& sigma2, std::size_t from = 0);

// Columns: tier,period,sigma2,psi,cumulative,phi (undefined cells empty;
// psi and cumulative are empty for tier 0).
void write_metrics_csv(std::ostream& os, const BullwhipMetrics& m);
// Columns: run,tier,ratio
void write_classical_csv(std::ostream& os, const BullwhipMetrics& m, const std::vector<std::size_t>& run_ids);
// Columns: tier,period,min,q1,median,q3,max,whisker_low,whisker_high,outliers
// with outliers separated by ';'. Tier 0 is demand.
void write_boxplot_csv(std::ostream& os, const EnsembleRecord& e);

}  // namespace bwlab
