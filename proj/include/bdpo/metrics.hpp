// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <fstream>
#include <string>

#include "bdpo/schedule.hpp"

namespace bdpo {

// CSV stream with a fixed column set. The schedule tuple goes into a leading
// comment line; rows print with %.17g so a re-parse is value-exact.
class MetricsWriter {
  public:
    static constexpr const char* kColumns =
        "step,q_loss,v_loss,actor_loss,mean_pathwise_kl,eval_return_mean,eval_return_std,"
        "wallclock_s";

    MetricsWriter(const std::string& path, const NoiseSchedule& schedule, bool append = false);

    void row(long step, double q_loss, double v_loss, double actor_loss, double mean_pathwise_kl,
             double eval_return_mean, double eval_return_std, double wallclock_s);
    void flush();
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ofstream out_;
};

}  // namespace bdpo
