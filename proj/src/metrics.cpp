// SPDX-License-Identifier: Apache-2.0
#include "bdpo/metrics.hpp"

#include <cstdio>
#include <filesystem>

#include "bdpo/errors.hpp"

namespace bdpo {

MetricsWriter::MetricsWriter(const std::string& path, const NoiseSchedule& schedule, bool append)
    : path_(path) {
    const bool fresh = !append || !std::filesystem::exists(path) ||
                       std::filesystem::file_size(path) == 0;
    out_.open(path, append ? std::ios::app : std::ios::trunc);
    if (!out_) throw DataError("metrics: cannot open '" + path + "' for writing");
    if (fresh) {
        char head[160];
        std::snprintf(head, sizeof head, "# schedule steps=%d beta_min=%.17g beta_max=%.17g clip=%d\n",
                      schedule.steps, schedule.beta_min, schedule.beta_max,
                      schedule.clip_samples ? 1 : 0);
        out_ << head << kColumns << '\n';
    }
}

void MetricsWriter::row(long step, double q_loss, double v_loss, double actor_loss,
                        double mean_pathwise_kl, double eval_return_mean, double eval_return_std,
                        double wallclock_s) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", step, q_loss,
                  v_loss, actor_loss, mean_pathwise_kl, eval_return_mean, eval_return_std,
                  wallclock_s);
    out_ << buf;
    if (!out_) throw DataError("metrics: write failed for '" + path_ + "'");
}

void MetricsWriter::flush() { out_.flush(); }

}  // namespace bdpo
