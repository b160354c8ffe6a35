// SPDX-License-Identifier: Apache-2.0
#include "bdpo/datasets.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "bdpo/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "serialized payloads assume a little-endian host");

namespace bdpo {

namespace {

constexpr const char* kMagic = "bdpo-dataset";
constexpr int kVersion = 1;
constexpr double kBound = 4.5;
constexpr double kPi = 3.14159265358979323846;

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void round_f32(Eigen::Ref<Eigen::MatrixXd> m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
        for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = f32(m(r, c));
}

double clamp_bound(double v) { return std::min(kBound, std::max(-kBound, v)); }

void write_rows(std::ofstream& out, const Eigen::MatrixXd& rows) {
    std::vector<float> buf(static_cast<std::size_t>(rows.rows()));
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        for (Eigen::Index r = 0; r < rows.rows(); ++r) buf[r] = static_cast<float>(rows(r, c));
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
}

// Reads rows x count floats; distinguishes truncation from other failures.
Eigen::MatrixXd read_rows(std::ifstream& in, Eigen::Index width, Eigen::Index count,
                          const std::string& path) {
    Eigen::MatrixXd m(width, count);
    std::vector<float> buf(static_cast<std::size_t>(width));
    for (Eigen::Index c = 0; c < count; ++c) {
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(buf.size() * sizeof(float)));
        if (in.gcount() != static_cast<std::streamsize>(buf.size() * sizeof(float)))
            throw TruncationError("dataset: '" + path + "' ends mid-payload at row " +
                                  std::to_string(c));
        for (Eigen::Index r = 0; r < width; ++r) m(r, c) = static_cast<double>(buf[r]);
    }
    // Trailing bytes mean the header undercounts; flag rather than ignore.
    char probe;
    if (in.read(&probe, 1))
        throw TruncationError("dataset: '" + path + "' has bytes beyond the declared rows");
    return m;
}

nlohmann::json read_header(std::ifstream& in, const std::string& path, const char* kind) {
    std::string line;
    if (!std::getline(in, line)) throw CorruptHeaderError("dataset: missing header in '" + path + "'");
    nlohmann::json h = nlohmann::json::parse(line, nullptr, false);
    if (h.is_discarded()) throw CorruptHeaderError("dataset: header is not valid JSON");
    if (!h.contains("magic") || h["magic"] != kMagic)
        throw CorruptHeaderError("dataset: bad magic in '" + path + "'");
    if (!h.contains("version") || h["version"] != kVersion)
        throw CorruptHeaderError("dataset: unsupported version in '" + path + "'");
    if (h.value("kind", "") != kind)
        throw DimMismatchError("dataset: '" + path + "' holds kind '" + h.value("kind", "?") +
                               "', expected '" + kind + "'");
    return h;
}

}  // namespace

void OfflineDataset::validate() const {
    const Eigen::Index n = rewards.size();
    if (states.cols() != n || actions.cols() != n || next_states.cols() != n || dones.size() != n)
        throw DimMismatchError("offline dataset: column counts disagree");
    if (states.rows() != state_dim || actions.rows() != action_dim ||
        next_states.rows() != state_dim)
        throw DimMismatchError("offline dataset: dims disagree with header");
    if (state_mean.size() != state_dim || state_std.size() != state_dim)
        throw DimMismatchError("offline dataset: normalization stats missing");
    if (actions.size() > 0 && actions.cwiseAbs().maxCoeff() > 1.0 + 1e-6)
        throw DataError("offline dataset: action outside [-1, 1]");
    for (Eigen::Index i = 0; i < n; ++i)
        if (dones(i) != 0.0 && dones(i) != 1.0)
            throw DataError("offline dataset: done flag must be 0 or 1");
}

EnergyDataset gen_energy_dataset(const std::string& name, int count, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("gen_energy_dataset: count must be positive");
    Rng rng(seed);
    EnergyDataset ds;
    ds.name = name;
    ds.seed = seed;
    ds.points.resize(2, count);
    ds.energy.resize(count);

    if (name == "8gaussians") {
        // Ring of 8 modes; energy drops by 0.06*ln2 per mode index, so at
        // eta = 0.06 each successive mode carries half the tilted weight.
        const double radius = 3.5, sig = 0.25, delta = 0.06 * std::log(2.0);
        ds.energy_spec =
            "8 modes on a radius-3.5 ring, jitter sigma 0.25; e = -0.06*ln(2)*mode_index";
        for (int i = 0; i < count; ++i) {
            const int mode = static_cast<int>(rng.uniform_index(8));
            const double ang = 2.0 * kPi * mode / 8.0;
            ds.points(0, i) = clamp_bound(radius * std::cos(ang) + sig * rng.normal());
            ds.points(1, i) = clamp_bound(radius * std::sin(ang) + sig * rng.normal());
            ds.energy(i) = -delta * mode;
        }
    } else if (name == "2spirals") {
        // Energy grows linearly in the angle parameter, which is monotone in
        // arc length; outer ends carry 8x the tilted weight at eta = 0.06.
        const double turns = 3.0 * kPi, rad = 4.0, jit = 0.1, c = 0.06 * std::log(8.0);
        ds.energy_spec =
            "two arms t=3*pi*sqrt(u), r=4t/(3pi), jitter 0.1; e = 0.06*ln(8)*t/(3pi)";
        for (int i = 0; i < count; ++i) {
            const double t = turns * std::sqrt(rng.uniform());
            const double r = rad * t / turns;
            const double arm = rng.uniform() < 0.5 ? 1.0 : -1.0;
            ds.points(0, i) = clamp_bound(arm * r * std::sin(t) + jit * rng.normal());
            ds.points(1, i) = clamp_bound(arm * r * std::cos(t) + jit * rng.normal());
            ds.energy(i) = c * t / turns;
        }
    } else if (name == "moons") {
        // Interleaved half-circles; energy is linear in the arc angle.
        const double rad = 2.8, jit = 0.1, c = 0.06 * std::log(6.0);
        ds.energy_spec =
            "half-circles r=2.8 at (-0.8,-0.6) up / (0.8,0.6) down, jitter 0.1; "
            "e = 0.06*ln(6)*phi/pi";
        for (int i = 0; i < count; ++i) {
            const double phi = kPi * rng.uniform();
            const bool lower = rng.uniform() < 0.5;
            const double cx = lower ? 0.8 : -0.8, cy = lower ? 0.6 : -0.6;
            const double sy = lower ? -1.0 : 1.0;
            ds.points(0, i) = clamp_bound(cx + rad * std::cos(phi) * sy + jit * rng.normal());
            ds.points(1, i) = clamp_bound(cy + sy * rad * std::sin(phi) + jit * rng.normal());
            ds.energy(i) = c * phi / kPi;
        }
    } else {
        throw ConfigError("gen_energy_dataset: unknown dataset '" + name + "'");
    }
    round_f32(ds.points);
    round_f32(ds.energy);
    return ds;
}

Eigen::VectorXd boltzmann_weights(const Eigen::VectorXd& energy, double eta) {
    if (!(eta > 0.0)) throw std::invalid_argument("boltzmann_weights: eta must be positive");
    if (energy.size() == 0) throw std::invalid_argument("boltzmann_weights: empty energies");
    if (!energy.allFinite()) throw DataError("boltzmann_weights: non-finite energy");
    Eigen::VectorXd w = ((energy.array() - energy.maxCoeff()) / eta).exp();
    return w / w.sum();
}

Eigen::MatrixXd resample_target(const EnergyDataset& ds, double eta, int count, Rng& rng) {
    Eigen::VectorXd w = boltzmann_weights(ds.energy, eta);
    Eigen::VectorXd cdf(w.size());
    double acc = 0.0;
    for (Eigen::Index i = 0; i < w.size(); ++i) cdf(i) = (acc += w(i));
    cdf(w.size() - 1) = 1.0;
    Eigen::MatrixXd out(2, count);
    for (int i = 0; i < count; ++i) {
        const double u = rng.uniform();
        const double* hit = std::lower_bound(cdf.data(), cdf.data() + cdf.size(), u);
        out.col(i) = ds.points.col(hit - cdf.data());
    }
    return out;
}

Eigen::VectorXd nearest_dataset_energy(const EnergyDataset& ds, const Eigen::MatrixXd& points) {
    Eigen::VectorXd out(points.cols());
    for (Eigen::Index i = 0; i < points.cols(); ++i) {
        Eigen::Index best;
        (ds.points.colwise() - points.col(i)).colwise().squaredNorm().minCoeff(&best);
        out(i) = ds.energy(best);
    }
    return out;
}

OfflineDataset make_bandit_dataset(const EnergyDataset& ds, double action_scale) {
    if (!(action_scale > 0.0))
        throw std::invalid_argument("make_bandit_dataset: scale must be positive");
    OfflineDataset out;
    out.name = ds.name;
    out.seed = ds.seed;
    out.state_dim = 0;
    out.action_dim = 2;
    const Eigen::Index n = ds.energy.size();
    out.states.resize(0, n);
    out.next_states.resize(0, n);
    out.actions = ds.points / action_scale;
    round_f32(out.actions);
    out.rewards = ds.energy;
    out.dones = Eigen::VectorXd::Ones(n);
    out.state_mean.resize(0);
    out.state_std.resize(0);
    out.validate();
    return out;
}

void save_energy_dataset(const EnergyDataset& ds, const std::string& path) {
    nlohmann::json h;
    h["magic"] = kMagic;
    h["version"] = kVersion;
    h["kind"] = "energy";
    h["rows"] = ds.energy.size();
    h["dims"] = {{"point", 2}, {"energy", 1}};
    h["name"] = ds.name;
    h["seed"] = ds.seed;
    h["energy_spec"] = ds.energy_spec;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("dataset: cannot open '" + path + "' for writing");
    out << h.dump() << '\n';
    Eigen::MatrixXd rows(3, ds.energy.size());
    rows.topRows(2) = ds.points;
    rows.row(2) = ds.energy.transpose();
    write_rows(out, rows);
    if (!out) throw DataError("dataset: write failed for '" + path + "'");
}

EnergyDataset load_energy_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("dataset: cannot open '" + path + "'");
    nlohmann::json h = read_header(in, path, "energy");
    if (!h.contains("dims") || h["dims"].value("point", 0) != 2 ||
        h["dims"].value("energy", 0) != 1)
        throw DimMismatchError("dataset: unexpected dims in '" + path + "'");
    const Eigen::Index rows = h.at("rows");
    Eigen::MatrixXd payload = read_rows(in, 3, rows, path);
    EnergyDataset ds;
    ds.name = h.value("name", "");
    ds.seed = h.value("seed", 0ULL);
    ds.energy_spec = h.value("energy_spec", "");
    ds.points = payload.topRows(2);
    ds.energy = payload.row(2).transpose();
    return ds;
}

void save_offline_dataset(const OfflineDataset& ds, const std::string& path) {
    ds.validate();
    nlohmann::json h;
    h["magic"] = kMagic;
    h["version"] = kVersion;
    h["kind"] = "offline";
    h["rows"] = ds.size();
    h["dims"] = {{"state", ds.state_dim}, {"action", ds.action_dim}};
    h["name"] = ds.name;
    h["seed"] = ds.seed;
    h["state_mean"] = std::vector<double>(ds.state_mean.data(),
                                          ds.state_mean.data() + ds.state_mean.size());
    h["state_std"] =
        std::vector<double>(ds.state_std.data(), ds.state_std.data() + ds.state_std.size());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("dataset: cannot open '" + path + "' for writing");
    out << h.dump() << '\n';
    const Eigen::Index w = 2 * ds.state_dim + ds.action_dim + 2;
    Eigen::MatrixXd rows(w, ds.size());
    Eigen::Index r = 0;
    rows.middleRows(r, ds.state_dim) = ds.states;
    r += ds.state_dim;
    rows.middleRows(r, ds.action_dim) = ds.actions;
    r += ds.action_dim;
    rows.row(r++) = ds.rewards.transpose();
    rows.middleRows(r, ds.state_dim) = ds.next_states;
    r += ds.state_dim;
    rows.row(r) = ds.dones.transpose();
    write_rows(out, rows);
    if (!out) throw DataError("dataset: write failed for '" + path + "'");
}

OfflineDataset load_offline_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("dataset: cannot open '" + path + "'");
    nlohmann::json h = read_header(in, path, "offline");
    OfflineDataset ds;
    ds.name = h.value("name", "");
    ds.seed = h.value("seed", 0ULL);
    ds.state_dim = h.at("dims").value("state", -1);
    ds.action_dim = h.at("dims").value("action", -1);
    if (ds.state_dim < 0 || ds.action_dim < 1)
        throw DimMismatchError("dataset: bad dims in '" + path + "'");
    const Eigen::Index rows = h.at("rows");
    const Eigen::Index w = 2 * ds.state_dim + ds.action_dim + 2;
    Eigen::MatrixXd payload = read_rows(in, w, rows, path);
    Eigen::Index r = 0;
    ds.states = payload.middleRows(r, ds.state_dim);
    r += ds.state_dim;
    ds.actions = payload.middleRows(r, ds.action_dim);
    r += ds.action_dim;
    ds.rewards = payload.row(r++).transpose();
    ds.next_states = payload.middleRows(r, ds.state_dim);
    r += ds.state_dim;
    ds.dones = payload.row(r).transpose();
    const auto mean = h.value("state_mean", std::vector<double>{});
    const auto stdv = h.value("state_std", std::vector<double>{});
    ds.state_mean = Eigen::Map<const Eigen::VectorXd>(mean.data(), mean.size());
    ds.state_std = Eigen::Map<const Eigen::VectorXd>(stdv.data(), stdv.size());
    ds.validate();
    return ds;
}

}  // namespace bdpo
