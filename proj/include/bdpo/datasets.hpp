// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "bdpo/rng.hpp"

namespace bdpo {

// 2D point cloud with a scalar energy per point. Coordinates stay within
// +-4.5; payloads are float32-rounded so file round-trips are exact.
struct EnergyDataset {
    std::string name;
    std::uint64_t seed = 0;
    std::string energy_spec;  // human-readable record of the energy definition
    Eigen::MatrixXd points;   // 2 x n
    Eigen::VectorXd energy;   // n
};

// Offline transitions. States are z-scored at collection time with the
// normalization stats kept alongside; actions always live in [-1, 1].
struct OfflineDataset {
    std::string name;
    std::uint64_t seed = 0;
    int state_dim = 0;
    int action_dim = 0;
    Eigen::MatrixXd states;       // state_dim x n
    Eigen::MatrixXd actions;      // action_dim x n
    Eigen::VectorXd rewards;      // n
    Eigen::MatrixXd next_states;  // state_dim x n
    Eigen::VectorXd dones;        // n, each 0 or 1
    Eigen::VectorXd state_mean, state_std;

    Eigen::Index size() const { return rewards.size(); }
    void validate() const;
};

// name is one of "8gaussians", "2spirals", "moons".
EnergyDataset gen_energy_dataset(const std::string& name, int count, std::uint64_t seed);

// softmax(energy / eta), computed with the max shift.
Eigen::VectorXd boltzmann_weights(const Eigen::VectorXd& energy, double eta);

// Multinomial draw of `count` points under the Boltzmann weights. This is the
// exact ground-truth target for the 2D tasks.
Eigen::MatrixXd resample_target(const EnergyDataset& ds, double eta, int count, Rng& rng);

// Energy of the nearest dataset point, used to score generated samples.
Eigen::VectorXd nearest_dataset_energy(const EnergyDataset& ds, const Eigen::MatrixXd& points);

// Single-step formulation of a 2D task: no state, action = point / scale,
// reward = energy, done everywhere.
OfflineDataset make_bandit_dataset(const EnergyDataset& ds, double action_scale);

void save_energy_dataset(const EnergyDataset& ds, const std::string& path);
EnergyDataset load_energy_dataset(const std::string& path);
void save_offline_dataset(const OfflineDataset& ds, const std::string& path);
OfflineDataset load_offline_dataset(const std::string& path);

}  // namespace bdpo
