#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <string>
#include <vector>

#include "ordr2/errors.hpp"

namespace ordr2 {

enum class ResponseKind { Continuous, Ordinal };

/// Named predictor columns plus one response, all of length n.
///
/// Ordinal responses are coded 1..r. A dataset may be built with an
/// unobserved code; fitting functions reject it.
struct Dataset {
  std::vector<std::string> names;
  Eigen::MatrixXd x;  // n x p, column j is `names[j]`
  ResponseKind kind = ResponseKind::Continuous;
  std::string response_name = "y";
  Eigen::VectorXd continuous;
  std::vector<int> ordinal;
  int categories = 0;
  bool preprocessed = false;  // output of the sensory pipeline

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index p() const { return x.cols(); }

  Eigen::Index column_index(const std::string& name) const {
    const auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw SchemaError("no column named '" + name + "'");
    return static_cast<Eigen::Index>(it - names.begin());
  }

  /// Counts n_1..n_r of the ordinal response.
  std::vector<long> category_counts() const {
    std::vector<long> counts(static_cast<std::size_t>(categories), 0);
    for (int c : ordinal) ++counts[static_cast<std::size_t>(c - 1)];
    return counts;
  }

  static Dataset continuous_response(std::vector<std::string> names, Eigen::MatrixXd x,
                                     Eigen::VectorXd y, std::string response_name = "y") {
    check_shape(names, x, y.size());
    Dataset d;
    d.names = std::move(names);
    d.x = std::move(x);
    d.kind = ResponseKind::Continuous;
    d.continuous = std::move(y);
    d.response_name = std::move(response_name);
    return d;
  }

  /// `categories` = 0 means "use the largest observed code".
  static Dataset ordinal_response(std::vector<std::string> names, Eigen::MatrixXd x,
                                  std::vector<int> codes, int categories = 0,
                                  std::string response_name = "y") {
    check_shape(names, x, static_cast<Eigen::Index>(codes.size()));
    const int max_code = *std::max_element(codes.begin(), codes.end());
    if (categories == 0) categories = max_code;
    for (int c : codes) {
      if (c < 1 || c > categories) {
        throw DomainError("ordinal code " + std::to_string(c) + " outside 1.." +
                          std::to_string(categories));
      }
    }
    Dataset d;
    d.names = std::move(names);
    d.x = std::move(x);
    d.kind = ResponseKind::Ordinal;
    d.ordinal = std::move(codes);
    d.categories = categories;
    d.response_name = std::move(response_name);
    return d;
  }

 private:
  static void check_shape(const std::vector<std::string>& names, const Eigen::MatrixXd& x,
                          Eigen::Index n) {
    if (n < 1) throw EmptyDataError("dataset has no rows");
    if (static_cast<Eigen::Index>(names.size()) != x.cols()) {
      throw SchemaError("column names do not match design width");
    }
    if (x.rows() != n) throw SchemaError("response length differs from design rows");
  }
};

}  // namespace ordr2
