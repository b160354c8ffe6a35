// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bdpo/schedule.hpp"
#include "bdpo/trainer.hpp"

namespace bdpo {

// Flat key-value run configuration. Defaults depend on the task tag; file
// entries and command-line overrides land on top via set_config_key, which
// rejects unknown keys.
struct RunConfig {
    TrainConfig train;

    std::string task = "8gaussians";  // 2d dataset name or "toymdp"
    std::string dataset;              // input dataset path
    std::string behavior;             // behavior checkpoint path
    std::string out;                  // primary output path (command-specific)
    std::string out_dir;              // default directory for outputs
    std::string checkpoint_out;
    std::string metrics_out;
    std::string figures_out;

    // dataset generation spec
    long gen_count = 8000;      // 2d points
    int gen_episodes = 2500;    // toymdp episodes
    double gen_kp = 1.0;        // collection controller gain
    double gen_noise = 0.3;     // collection exploration std
    double gen_scale = 4.5;     // 2d point -> action scaling

    // noise schedule
    int schedule_steps = 50;
    double beta_min = 1e-3;
    double beta_max = 0.35;
    bool clip_samples = false;

    // plotting
    std::string plot_kind = "samples";
    int plot_step = 0;

    std::uint64_t seed = 1;
};

bool is_2d_task(const std::string& task);

// Task-dependent defaults; unknown task -> ConfigError.
RunConfig default_run_config(const std::string& task);

// Typed assignment with alias support (name -> task, count -> gen_count,
// kind -> plot_kind, step -> plot_step). Unknown key or unparsable value ->
// ConfigError naming the key.
void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

// Parses a flat key = value file ('#' comments, optional quotes).
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path);

// defaults(task) + file entries + overrides, in that order. The task tag is
// scanned first so its defaults apply before any explicit key.
RunConfig resolve_config(const std::string& file_path,
                         const std::vector<std::pair<std::string, std::string>>& overrides);

void validate_run_config(const RunConfig& cfg);

// Canonical sorted "key = value" echo; parseable by parse_config_file.
std::string config_echo(const RunConfig& cfg);

NoiseSchedule schedule_from_config(const RunConfig& cfg);

}  // namespace bdpo
