#pragma once

#include "t4s/t3.hpp"

#include <string>

namespace t4s {

/// f_k(x) = f0 + sum_j (1/j!) T_j(x, ..., x).
struct T4SModel {
    Vector f0;
    std::vector<TuckerTensorTrain> terms;  // terms[j-1] has order j+1
    // Optional metadata; empty when unused.
    Matrix U, V, C;
    Vector theta0;
    std::string meta;  // JSON text: seeds, stage traces

    int max_order() const { return static_cast<int>(terms.size()); }
    Index input_dim() const;
    Index output_dim() const { return f0.size(); }
    void validate() const;
};

Vector evaluate(const T4SModel& model, const Vector& x, int up_to);
Vector evaluate(const T4SModel& model, const Vector& x);

/// Composes input bases with U and the output basis with V.
T4SModel lift_to_original(const T4SModel& model, const Matrix& u, const Matrix& v);

void save_model(const T4SModel& model, const std::string& path);
T4SModel load_model(const std::string& path);
void write_model(std::ostream& os, const T4SModel& model);
T4SModel read_model(std::istream& is);

}  // namespace t4s
