#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace dsgd {

/// x(k) in R^{N m}. Stored as an m x N matrix whose column i is node i's
/// estimate, so the column-major buffer is exactly the stacked vector
/// [x_1; x_2; ...; x_N].
struct StackedState {
  Eigen::MatrixXd nodes;
  std::uint64_t round = 0;

  StackedState() = default;
  StackedState(std::size_t node_count, std::size_t dimension, std::uint64_t k = 0)
      : nodes(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dimension), static_cast<Eigen::Index>(node_count))),
        round(k) {}
  StackedState(Eigen::MatrixXd x, std::uint64_t k) : nodes(std::move(x)), round(k) {}

  std::size_t node_count() const noexcept { return static_cast<std::size_t>(nodes.cols()); }
  std::size_t dimension() const noexcept { return static_cast<std::size_t>(nodes.rows()); }

  auto node(std::size_t i) { return nodes.col(static_cast<Eigen::Index>(i)); }
  auto node(std::size_t i) const { return nodes.col(static_cast<Eigen::Index>(i)); }

  Eigen::Map<const Eigen::VectorXd> stacked() const noexcept { return {nodes.data(), nodes.size()}; }
  Eigen::VectorXd average() const { return nodes.rowwise().mean(); }
};

}  // namespace dsgd
