#pragma once

// Internal JSON converters shared by the model serialization code. Not
// installed; public headers stay free of the JSON dependency.

#include <json.hpp>

#include "motionhmm/hmm.hpp"
#include "motionhmm/matrix.hpp"

namespace motionhmm::detail {

nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& rows);
nlohmann::json hmm_to_json_value(const HmmParams& model);
HmmParams hmm_from_json_value(const nlohmann::json& doc);

}  // namespace motionhmm::detail
