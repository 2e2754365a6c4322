#include "escl/ensemble.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace escl {

namespace {

void put_u64(std::ofstream& os, std::uint64_t v) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::ifstream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

void put_f64_block(std::ofstream& os, const std::vector<double>& v) {
    // doubles are written byte-by-byte little-endian regardless of host order
    for (double d : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &d, 8);
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(buf), 8);
    }
}

void get_f64_block(std::ifstream& is, std::vector<double>& v, std::size_t n) {
    v.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        unsigned char buf[8];
        is.read(reinterpret_cast<char*>(buf), 8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
        std::memcpy(&v[j], &bits, 8);
    }
}

}  // namespace

void write_ensemble_binary(const std::string& path, const PathEnsemble& ens,
                           const std::vector<double>& channel, int channel_modes) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open " + path + " for writing");
    os.write("ESCL1", 5);
    put_u64(os, static_cast<std::uint64_t>(ens.n_paths));
    put_u64(os, static_cast<std::uint64_t>(ens.grid.n_steps));
    put_u64(os, static_cast<std::uint64_t>(ens.n_modes));
    put_u64(os, ens.master_seed);
    put_f64_block(os, ens.states);
    if (!channel.empty()) {
        os.write("IBLK1", 5);
        put_u64(os, static_cast<std::uint64_t>(channel_modes));
        put_f64_block(os, channel);
    }
    if (!os) throw Error("write failed for " + path);
}

EnsembleFile read_ensemble_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open " + path);
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, "ESCL1", 5) != 0) throw Error(path + ": bad magic");
    EnsembleFile f;
    f.n_paths = get_u64(is);
    f.n_steps = get_u64(is);
    f.n_modes = get_u64(is);
    f.seed = get_u64(is);
    get_f64_block(is, f.states, f.n_paths * (f.n_steps + 1) * f.n_modes);
    if (!is) throw Error(path + ": truncated state block");
    char tag[5];
    is.read(tag, 5);
    if (is && std::memcmp(tag, "IBLK1", 5) == 0) {
        f.channel_modes = get_u64(is);
        get_f64_block(is, f.channel, f.n_paths * (f.n_steps + 1) * f.channel_modes);
        if (!is) throw Error(path + ": truncated I block");
    }
    return f;
}

void write_ensemble_csv(const std::string& path, const PathEnsemble& ens) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open " + path + " for writing");
    os << "path,t";
    for (int k = 0; k < ens.n_modes; ++k) os << ",x" << k + 1;
    os << "\n";
    char buf[64];
    for (int p = 0; p < ens.n_paths; ++p) {
        for (int i = 0; i < ens.grid.n_nodes(); ++i) {
            os << p;
            std::snprintf(buf, sizeof buf, ",%.17g", ens.grid.node(i));
            os << buf;
            const auto x = ens.state_at(p, i);
            for (int k = 0; k < ens.n_modes; ++k) {
                std::snprintf(buf, sizeof buf, ",%.17g", x[k]);
                os << buf;
            }
            os << "\n";
        }
    }
}

}  // namespace escl
