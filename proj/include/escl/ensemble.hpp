#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "escl/common.hpp"
#include "escl/grid.hpp"

namespace escl {

/// Per-path trajectories in path-major contiguous storage. `states` holds the
/// state at every grid node, `controls` the control applied on each step,
/// `noise1`/`noise2` the standard-normal draws behind the W^1 / W^2 drivers.
struct PathEnsemble {
    TimeGrid grid;
    int n_modes = 0;
    int m_modes = 0;
    int n_paths = 0;
    std::uint64_t master_seed = 0;

    std::vector<double> states;    // n_paths * (n_steps+1) * n_modes
    std::vector<double> controls;  // n_paths * n_steps * m_modes
    std::vector<double> noise1;    // n_paths * n_steps * n_modes
    std::vector<double> noise2;    // n_paths * n_steps * m_modes

    void allocate() {
        states.assign(static_cast<std::size_t>(n_paths) * grid.n_nodes() * n_modes, 0.0);
        controls.assign(static_cast<std::size_t>(n_paths) * grid.n_steps * m_modes, 0.0);
        noise1.assign(static_cast<std::size_t>(n_paths) * grid.n_steps * n_modes, 0.0);
        noise2.assign(static_cast<std::size_t>(n_paths) * grid.n_steps * m_modes, 0.0);
    }

    Eigen::Map<Eigen::VectorXd> state_at(int path, int node) {
        return {states.data() + (static_cast<std::size_t>(path) * grid.n_nodes() + node) * n_modes,
                n_modes};
    }
    Eigen::Map<const Eigen::VectorXd> state_at(int path, int node) const {
        return {states.data() + (static_cast<std::size_t>(path) * grid.n_nodes() + node) * n_modes,
                n_modes};
    }
    Eigen::Map<Eigen::VectorXd> control_at(int path, int step) {
        return {controls.data() + (static_cast<std::size_t>(path) * grid.n_steps + step) * m_modes,
                m_modes};
    }
    Eigen::Map<const Eigen::VectorXd> control_at(int path, int step) const {
        return {controls.data() + (static_cast<std::size_t>(path) * grid.n_steps + step) * m_modes,
                m_modes};
    }
    Eigen::Map<Eigen::VectorXd> noise1_at(int path, int step) {
        return {noise1.data() + (static_cast<std::size_t>(path) * grid.n_steps + step) * n_modes,
                n_modes};
    }
    Eigen::Map<const Eigen::VectorXd> noise1_at(int path, int step) const {
        return {noise1.data() + (static_cast<std::size_t>(path) * grid.n_steps + step) * n_modes,
                n_modes};
    }
    Eigen::Map<Eigen::VectorXd> noise2_at(int path, int step) {
        return {noise2.data() + (static_cast<std::size_t>(path) * grid.n_steps + step) * m_modes,
                m_modes};
    }
    Eigen::Map<const Eigen::VectorXd> noise2_at(int path, int step) const {
        return {noise2.data() + (static_cast<std::size_t>(path) * grid.n_steps + step) * m_modes,
                m_modes};
    }
};

/// Columnar binary layout. Header: magic "ESCL1", then n_paths, n_steps,
/// n_modes, seed as little-endian u64; body: little-endian f64 state block,
/// path-major. An optional "I" block (m_modes + channel values) follows when
/// `channel` is nonempty.
void write_ensemble_binary(const std::string& path, const PathEnsemble& ens,
                           const std::vector<double>& channel = {}, int channel_modes = 0);

struct EnsembleFile {
    std::uint64_t n_paths = 0, n_steps = 0, n_modes = 0, seed = 0;
    std::vector<double> states;
    std::uint64_t channel_modes = 0;
    std::vector<double> channel;
};

EnsembleFile read_ensemble_binary(const std::string& path);

/// Small-run CSV: one row per (path, node) with time and state coordinates.
void write_ensemble_csv(const std::string& path, const PathEnsemble& ens);

}  // namespace escl
