#pragma once

#include "psp/error.hpp"

#include <map>
#include <string>
#include <vector>

namespace psp::lang {

// Concrete value for one program parameter. Arrays are stored flat in
// row-major order together with their dimensions.
struct BoundValue {
    enum class Kind { Scalar, Bool, Array };
    Kind kind = Kind::Scalar;
    double scalar = 0.0;
    bool flag = false;
    std::vector<long long> dims;
    std::vector<double> data;

    long long dim(int axis) const { return dims.at(static_cast<std::size_t>(axis)); }

    double at(const std::vector<long long>& idx) const;
    long long flat_index(const std::vector<long long>& idx) const;
};

// Maps every program parameter to a concrete value. JSON wire format:
//   {"params": {"x": [[0.4, 1.0], ...], "Mu": [0.0, 0.0], "eps": 0.5, "f": true}}
struct InputBinding {
    std::map<std::string, BoundValue> params;

    static InputBinding from_json_text(const std::string& text);
    static InputBinding from_file(const std::string& path);

    bool has(const std::string& name) const { return params.count(name) > 0; }
    const BoundValue& get(const std::string& name) const;

    InputBinding& set_scalar(const std::string& name, double v);
    InputBinding& set_bool(const std::string& name, bool v);
    InputBinding& set_array(const std::string& name, std::vector<long long> dims,
                            std::vector<double> data);
    InputBinding& set_vector(const std::string& name, const std::vector<double>& v);
    InputBinding& set_matrix(const std::string& name,
                             const std::vector<std::vector<double>>& rows);
};

// Array dimensions per parameter, as needed for validation; scalars and
// booleans have no entry.
using ParamShapes = std::map<std::string, std::vector<long long>>;

ParamShapes shapes_of(const InputBinding& binding);

} // namespace psp::lang
