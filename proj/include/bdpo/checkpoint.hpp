// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bdpo/mlp.hpp"
#include "bdpo/optim.hpp"

namespace bdpo {

// Versioned container: one JSON header line describing named float64 arrays,
// followed by their concatenated little-endian payload. Round-trips bit-exact.
struct Checkpoint {
    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, Eigen::VectorXd>> arrays;

    static constexpr const char* kMagic = "bdpo-checkpoint";
    static constexpr int kVersion = 1;

    void add(const std::string& name, Eigen::VectorXd values);
    bool has(const std::string& name) const;
    const Eigen::VectorXd& get(const std::string& name) const;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

// Network parameters are serialized with weight blocks transposed to
// row-major, per the container contract; loading restores the internal layout.
void checkpoint_put_mlp(Checkpoint& ck, const std::string& prefix, const Mlp& net);
Mlp checkpoint_take_mlp(const Checkpoint& ck, const std::string& prefix);

void checkpoint_put_adam(Checkpoint& ck, const std::string& prefix, const AdamState& st,
                         const std::vector<int>& widths);
AdamState checkpoint_take_adam(const Checkpoint& ck, const std::string& prefix,
                               const std::vector<int>& widths);

void checkpoint_put_ema(Checkpoint& ck, const std::string& prefix, const EmaTracker& ema,
                        const std::vector<int>& widths);
EmaTracker checkpoint_take_ema(const Checkpoint& ck, const std::string& prefix,
                               const std::vector<int>& widths);

}  // namespace bdpo
