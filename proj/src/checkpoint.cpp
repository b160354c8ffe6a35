// SPDX-License-Identifier: Apache-2.0
#include "bdpo/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "bdpo/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "serialized payloads assume a little-endian host");

namespace bdpo {

namespace {

// Flat layout is [W0, b0, W1, b1, ...]; this permutes each W block between
// the internal column-major order and the serialized row-major order.
Eigen::VectorXd permute_weight_blocks(const Eigen::VectorXd& flat, const std::vector<int>& widths,
                                      bool to_rowmajor) {
    Eigen::VectorXd out(flat.size());
    Eigen::Index off = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const Eigen::Index rows = widths[l + 1], cols = widths[l];
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) {
                const Eigen::Index cm = off + c * rows + r;
                const Eigen::Index rm = off + r * cols + c;
                if (to_rowmajor)
                    out(rm) = flat(cm);
                else
                    out(cm) = flat(rm);
            }
        off += rows * cols;
        out.segment(off, rows) = flat.segment(off, rows);
        off += rows;
    }
    return out;
}

std::vector<int> widths_from_meta(const nlohmann::json& meta, const std::string& prefix) {
    if (!meta.contains(prefix) || !meta.at(prefix).contains("widths"))
        throw CorruptHeaderError("checkpoint: missing widths for '" + prefix + "'");
    return meta.at(prefix).at("widths").get<std::vector<int>>();
}

}  // namespace

void Checkpoint::add(const std::string& name, Eigen::VectorXd values) {
    for (auto& [n, v] : arrays)
        if (n == name) throw std::invalid_argument("checkpoint: duplicate array '" + name + "'");
    arrays.emplace_back(name, std::move(values));
}

bool Checkpoint::has(const std::string& name) const {
    for (auto& [n, v] : arrays)
        if (n == name) return true;
    return false;
}

const Eigen::VectorXd& Checkpoint::get(const std::string& name) const {
    for (auto& [n, v] : arrays)
        if (n == name) return v;
    throw DataError("checkpoint: no array named '" + name + "'");
}

void Checkpoint::save(const std::string& path) const {
    nlohmann::json header;
    header["magic"] = kMagic;
    header["version"] = kVersion;
    header["meta"] = meta;
    auto& arr = header["arrays"] = nlohmann::json::array();
    for (auto& [name, values] : arrays) arr.push_back({{"name", name}, {"len", values.size()}});

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("checkpoint: cannot open '" + path + "' for writing");
    out << header.dump() << '\n';
    for (auto& [name, values] : arrays)
        out.write(reinterpret_cast<const char*>(values.data()),
                  static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw DataError("checkpoint: write failed for '" + path + "'");
}

Checkpoint Checkpoint::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("checkpoint: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw CorruptHeaderError("checkpoint: missing header line");
    nlohmann::json header = nlohmann::json::parse(line, nullptr, false);
    if (header.is_discarded() || !header.contains("magic"))
        throw CorruptHeaderError("checkpoint: header is not valid JSON");
    if (header["magic"] != kMagic)
        throw CorruptHeaderError("checkpoint: bad magic in '" + path + "'");
    if (header["version"] != kVersion)
        throw CorruptHeaderError("checkpoint: unsupported version");

    Checkpoint ck;
    ck.meta = header.value("meta", nlohmann::json::object());
    for (auto& entry : header.at("arrays")) {
        const std::string name = entry.at("name");
        const Eigen::Index len = entry.at("len");
        Eigen::VectorXd values(len);
        in.read(reinterpret_cast<char*>(values.data()),
                static_cast<std::streamsize>(len * sizeof(double)));
        if (in.gcount() != static_cast<std::streamsize>(len * sizeof(double)))
            throw TruncationError("checkpoint: payload truncated in '" + name + "'");
        ck.arrays.emplace_back(name, std::move(values));
    }
    return ck;
}

void checkpoint_put_mlp(Checkpoint& ck, const std::string& prefix, const Mlp& net) {
    ck.meta[prefix]["widths"] = net.widths;
    ck.meta[prefix]["activation"] = "silu";
    ck.add(prefix + ".params", permute_weight_blocks(net.params, net.widths, true));
}

Mlp checkpoint_take_mlp(const Checkpoint& ck, const std::string& prefix) {
    Mlp net;
    net.widths = widths_from_meta(ck.meta, prefix);
    const Eigen::VectorXd& stored = ck.get(prefix + ".params");
    net.params = permute_weight_blocks(stored, net.widths, false);
    if (net.params.size() != stored.size())
        throw DimMismatchError("checkpoint: parameter count mismatch for '" + prefix + "'");
    return net;
}

void checkpoint_put_adam(Checkpoint& ck, const std::string& prefix, const AdamState& st,
                         const std::vector<int>& widths) {
    ck.meta[prefix]["adam"] = {{"lr", st.cfg.lr},       {"beta1", st.cfg.beta1},
                               {"beta2", st.cfg.beta2}, {"eps", st.cfg.eps},
                               {"clip_norm", st.cfg.clip_norm},
                               {"cosine_horizon", st.cfg.cosine_horizon},
                               {"step", st.step}};
    ck.add(prefix + ".adam.m", permute_weight_blocks(st.m, widths, true));
    ck.add(prefix + ".adam.v", permute_weight_blocks(st.v, widths, true));
}

AdamState checkpoint_take_adam(const Checkpoint& ck, const std::string& prefix,
                               const std::vector<int>& widths) {
    const auto& j = ck.meta.at(prefix).at("adam");
    AdamState st;
    st.cfg.lr = j.at("lr");
    st.cfg.beta1 = j.at("beta1");
    st.cfg.beta2 = j.at("beta2");
    st.cfg.eps = j.at("eps");
    st.cfg.clip_norm = j.at("clip_norm");
    st.cfg.cosine_horizon = j.at("cosine_horizon");
    st.step = j.at("step");
    st.m = permute_weight_blocks(ck.get(prefix + ".adam.m"), widths, false);
    st.v = permute_weight_blocks(ck.get(prefix + ".adam.v"), widths, false);
    return st;
}

void checkpoint_put_ema(Checkpoint& ck, const std::string& prefix, const EmaTracker& ema,
                        const std::vector<int>& widths) {
    ck.meta[prefix]["ema_rate"] = ema.rate;
    ck.add(prefix + ".ema", permute_weight_blocks(ema.shadow, widths, true));
}

EmaTracker checkpoint_take_ema(const Checkpoint& ck, const std::string& prefix,
                               const std::vector<int>& widths) {
    EmaTracker ema;
    ema.rate = ck.meta.at(prefix).at("ema_rate");
    ema.shadow = permute_weight_blocks(ck.get(prefix + ".ema"), widths, false);
    return ema;
}

}  // namespace bdpo
