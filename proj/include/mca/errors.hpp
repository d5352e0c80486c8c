#pragma once

#include <stdexcept>
#include <string>

namespace mca {

// Malformed or out-of-contract input data (CSV/JSON ingestion, bad shapes).
class parse_error : public std::runtime_error {
 public:
  explicit parse_error(const std::string& what) : std::runtime_error(what) {}
};

// A computation that cannot proceed (singular system, total EM collapse).
class numerical_error : public std::runtime_error {
 public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// A mixture component lost essentially all of its mass during an M step.
class component_collapse : public numerical_error {
 public:
  component_collapse(int component, double pi)
      : numerical_error("mixture component " + std::to_string(component) +
                        " collapsed (pi = " + std::to_string(pi) + ")"),
        component_(component) {}
  int component() const { return component_; }

 private:
  int component_;
};

}  // namespace mca
