#ifndef AAPU_CHECKPOINT_HPP
#define AAPU_CHECKPOINT_HPP

/// Flat versioned binary dump of all model tensors; round-trips bit-exactly.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "aapu/common.hpp"
#include "aapu/net.hpp"

namespace aapu {

namespace detail {

constexpr char kCheckpointMagic[4] = {'a', 'a', 'P', 'U'};
constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
inline std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
inline void put_vec(std::ostream& out, const Vector& v) {
    put_u64(out, static_cast<std::uint64_t>(v.size()));
    out.write(reinterpret_cast<const char*>(v.data()), sizeof(double) * v.size());
}
inline Vector get_vec(std::istream& in) {
    Vector v(static_cast<Eigen::Index>(get_u64(in)));
    in.read(reinterpret_cast<char*>(v.data()), sizeof(double) * v.size());
    return v;
}
inline void put_mat(std::ostream& out, const Matrix& m) {
    put_u64(out, static_cast<std::uint64_t>(m.rows()));
    put_u64(out, static_cast<std::uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()), sizeof(double) * m.size());
}
inline Matrix get_mat(std::istream& in) {
    const auto rows = static_cast<Eigen::Index>(get_u64(in));
    const auto cols = static_cast<Eigen::Index>(get_u64(in));
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()), sizeof(double) * m.size());
    return m;
}

}  // namespace detail

inline void save_checkpoint(const MlpParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out.write(detail::kCheckpointMagic, 4);
    detail::put_u64(out, detail::kCheckpointVersion);

    const MlpSpec& s = params.spec;
    detail::put_u64(out, s.layer_dims.size());
    for (int d : s.layer_dims) detail::put_u64(out, static_cast<std::uint64_t>(d));
    for (bool b : s.use_batchnorm) out.put(b ? 1 : 0);
    for (double r : s.dropout_rates)
        out.write(reinterpret_cast<const char*>(&r), sizeof r);
    detail::put_u64(out, s.seed);

    for (const auto& lp : params.linear) {
        detail::put_mat(out, lp.weight);
        detail::put_vec(out, lp.bias);
    }
    for (const auto& b : params.bn) {
        out.put(b ? 1 : 0);
        if (b) {
            detail::put_vec(out, b->scale);
            detail::put_vec(out, b->shift);
            detail::put_vec(out, b->running_mean);
            detail::put_vec(out, b->running_var);
        }
    }
    if (!out) throw DataError("write failure on checkpoint: " + path);
}

inline MlpParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, 4) != 0)
        throw DataError("not a checkpoint file: " + path);
    if (detail::get_u64(in) != detail::kCheckpointVersion)
        throw DataError("unsupported checkpoint version in " + path);

    MlpParams p;
    const auto ndims = detail::get_u64(in);
    p.spec.layer_dims.resize(ndims);
    for (auto& d : p.spec.layer_dims)
        d = static_cast<int>(detail::get_u64(in));
    const int nh = std::max<int>(0, static_cast<int>(ndims) - 2);
    p.spec.use_batchnorm.resize(nh);
    for (int i = 0; i < nh; ++i) p.spec.use_batchnorm[i] = in.get() != 0;
    p.spec.dropout_rates.resize(nh);
    for (double& r : p.spec.dropout_rates)
        in.read(reinterpret_cast<char*>(&r), sizeof r);
    p.spec.seed = detail::get_u64(in);

    for (int l = 0; l + 1 < static_cast<int>(ndims); ++l) {
        LinearParams lp;
        lp.weight = detail::get_mat(in);
        lp.bias = detail::get_vec(in);
        p.linear.push_back(std::move(lp));
    }
    for (int l = 0; l < nh; ++l) {
        if (in.get() != 0) {
            BatchNormParams b;
            b.scale = detail::get_vec(in);
            b.shift = detail::get_vec(in);
            b.running_mean = detail::get_vec(in);
            b.running_var = detail::get_vec(in);
            p.bn.emplace_back(std::move(b));
        } else {
            p.bn.emplace_back(std::nullopt);
        }
    }
    if (!in) throw DataError("truncated checkpoint: " + path);
    return p;
}

}  // namespace aapu

#endif
