#include "psp/binding.hpp"

#include <json.hpp>

#include <fstream>
#include <functional>
#include <sstream>

namespace psp::lang {

using nlohmann::json;

long long BoundValue::flat_index(const std::vector<long long>& idx) const {
    if (idx.size() != dims.size()) {
        fail(Error::Kind::Unroll, "array index rank mismatch");
    }
    long long flat = 0;
    for (std::size_t axis = 0; axis < dims.size(); axis++) {
        if (idx[axis] < 0 || idx[axis] >= dims[axis]) {
            fail(Error::Kind::Unroll,
                 "array index " + std::to_string(idx[axis]) + " out of bounds for axis " +
                     std::to_string(axis) + " with extent " + std::to_string(dims[axis]));
        }
        flat = flat * dims[axis] + idx[axis];
    }
    return flat;
}

double BoundValue::at(const std::vector<long long>& idx) const {
    return data[static_cast<std::size_t>(flat_index(idx))];
}

const BoundValue& InputBinding::get(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) {
        fail(Error::Kind::Unroll, "no value bound for parameter '" + name + "'");
    }
    return it->second;
}

InputBinding& InputBinding::set_scalar(const std::string& name, double v) {
    BoundValue value;
    value.kind = BoundValue::Kind::Scalar;
    value.scalar = v;
    params[name] = std::move(value);
    return *this;
}

InputBinding& InputBinding::set_bool(const std::string& name, bool v) {
    BoundValue value;
    value.kind = BoundValue::Kind::Bool;
    value.flag = v;
    params[name] = std::move(value);
    return *this;
}

InputBinding& InputBinding::set_array(const std::string& name, std::vector<long long> dims,
                                      std::vector<double> data) {
    long long expect = 1;
    for (long long d : dims) expect *= d;
    if (expect != static_cast<long long>(data.size())) {
        fail(Error::Kind::Io, "array data for '" + name + "' does not match its dimensions");
    }
    BoundValue value;
    value.kind = BoundValue::Kind::Array;
    value.dims = std::move(dims);
    value.data = std::move(data);
    params[name] = std::move(value);
    return *this;
}

InputBinding& InputBinding::set_vector(const std::string& name, const std::vector<double>& v) {
    return set_array(name, {static_cast<long long>(v.size())}, v);
}

InputBinding& InputBinding::set_matrix(const std::string& name,
                                       const std::vector<std::vector<double>>& rows) {
    std::vector<double> flat;
    for (const auto& row : rows) {
        if (row.size() != rows[0].size()) {
            fail(Error::Kind::Io, "ragged matrix for '" + name + "'");
        }
        flat.insert(flat.end(), row.begin(), row.end());
    }
    return set_array(name,
                     {static_cast<long long>(rows.size()),
                      static_cast<long long>(rows.empty() ? 0 : rows[0].size())},
                     std::move(flat));
}

namespace {

BoundValue parse_value(const std::string& name, const json& j) {
    BoundValue value;
    if (j.is_boolean()) {
        value.kind = BoundValue::Kind::Bool;
        value.flag = j.get<bool>();
        return value;
    }
    if (j.is_number()) {
        value.kind = BoundValue::Kind::Scalar;
        value.scalar = j.get<double>();
        return value;
    }
    if (!j.is_array()) {
        fail(Error::Kind::Io, "parameter '" + name + "' must be a number, boolean, or array");
    }

    // find rank and dimensions; arrays must be rectangular
    value.kind = BoundValue::Kind::Array;
    const json* cursor = &j;
    while (cursor->is_array()) {
        value.dims.push_back(static_cast<long long>(cursor->size()));
        if (cursor->empty()) break;
        cursor = &(*cursor)[0];
    }
    if (value.dims.size() > 2) {
        fail(Error::Kind::Io, "parameter '" + name + "' has rank > 2; only 1-D and 2-D arrays are supported");
    }

    std::function<void(const json&, std::size_t)> walk = [&](const json& node, std::size_t depth) {
        if (depth == value.dims.size()) {
            if (!node.is_number()) {
                fail(Error::Kind::Io, "parameter '" + name + "' contains a non-numeric element");
            }
            value.data.push_back(node.get<double>());
            return;
        }
        if (!node.is_array() || static_cast<long long>(node.size()) != value.dims[depth]) {
            fail(Error::Kind::Io, "parameter '" + name + "' is ragged; arrays must be rectangular");
        }
        for (const auto& child : node) walk(child, depth + 1);
    };
    walk(j, 0);
    return value;
}

} // namespace

InputBinding InputBinding::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        fail(Error::Kind::Io, "binding is not valid JSON");
    }
    if (!j.is_object() || !j.contains("params") || !j["params"].is_object()) {
        fail(Error::Kind::Io, "binding JSON must be an object with a \"params\" object");
    }
    InputBinding binding;
    for (auto it = j["params"].begin(); it != j["params"].end(); ++it) {
        binding.params[it.key()] = parse_value(it.key(), it.value());
    }
    return binding;
}

InputBinding InputBinding::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        fail(Error::Kind::Io, "cannot open binding file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

ParamShapes shapes_of(const InputBinding& binding) {
    ParamShapes shapes;
    for (const auto& [name, value] : binding.params) {
        if (value.kind == BoundValue::Kind::Array) {
            shapes[name] = value.dims;
        }
    }
    return shapes;
}

} // namespace psp::lang
