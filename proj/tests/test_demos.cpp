#include <doctest.h>

#include <cmath>
#include <numeric>

#include "difreg/demos.hpp"

using namespace difreg;

namespace {

// Largest rise of the objective across any 50-iteration span within one
// pyramid level, starting at iteration 10, relative to the earlier value.
double worst_window_rise(const std::vector<TraceRow>& trace) {
  double worst = 0.0;
  for (std::size_t i = 0; i + 50 < trace.size(); ++i) {
    if (trace[i].iteration < 10) continue;
    const auto& a = trace[i];
    const auto& b = trace[i + 50];
    if (a.level != b.level) continue;
    worst = std::max(worst, (b.objective - a.objective) / std::abs(a.objective));
  }
  return worst;
}

}  // namespace

TEST_CASE("demo scenarios pass their metrics with a settling trace") {
  for (auto kind : {DemoKind::rigid, DemoKind::ffd, DemoKind::demons}) {
    const DemoResult r = run_demo(kind);
    CAPTURE(r.name);
    for (const auto& m : r.metrics) {
      CAPTURE(m.name);
      CAPTURE(m.value);
      CHECK(m.passed());
    }
    const auto& its = r.config.optimizer.iterations;
    CHECK(r.report.trace.size() == static_cast<std::size_t>(std::accumulate(its.begin(), its.end(), 0)));
    // Fixed-rate Adam jitters at about 1e-4 of the objective once converged.
    CHECK(worst_window_rise(r.report.trace) <= 1e-3);
  }
}

TEST_CASE("demo names") {
  CHECK(parse_demo_kind("ffd") == DemoKind::ffd);
  CHECK_THROWS(parse_demo_kind("affine"));
}
