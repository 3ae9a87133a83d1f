// Guides one raised-arm posture back into the low-effort region and
// compares the field-guided execution with a straight point-to-point move.

#include <cstdio>

#include "csefplan/bench.hpp"
#include "csefplan/presets.hpp"

using namespace csefplan;

int main() {
  const KinematicChain chain = presets::upper_limb_arm();
  const ErgoSpec spec = presets::upper_limb_ergo();

  JointConfig q0(4);
  q0 << 1.2, 1.1, 0.3, -0.8;  // elevated, twisted start
  std::printf("start posture: [%.2f %.2f %.2f %.2f], field value %.3f\n", q0[0], q0[1], q0[2],
              q0[3], csef_value(spec, q0));

  const bench::GuidanceOutcome o = bench::run_guidance_posture(chain, spec, q0, PlannerParams{});

  std::printf("plan: %zu samples over %.2f s, hand path %.3f m\n", o.plan.trajectory.size(),
              o.plan.trajectory.duration(), o.plan.metrics.cartesian_path_length);
  std::printf("guided execution:   avg field %.4f, final %.4f\n", o.csef_avg, o.terminal_csef);
  std::printf("point-to-point:     avg field %.4f, final %.4f\n", o.ptp_avg, o.ptp_terminal_csef);
  std::printf("exposure reduction: %.1f%%\n", o.reduction_percent);
  std::printf("tracking rmse:      %.4f rad per joint\n", o.rmse_joint);

  std::printf("\n%8s %12s %12s\n", "t [s]", "guided", "straight");
  const std::size_t n = std::min(o.human_csef.size(), o.human_ptp.size());
  for (std::size_t k = 0; k < n; k += n / 12 + 1) {
    std::printf("%8.2f %12.4f %12.4f\n", o.human_csef.samples[k].t,
                csef_value(spec, o.human_csef.samples[k].x),
                csef_value(spec, o.human_ptp.samples[k].x));
  }
  return 0;
}
