#include "sgdrf/error.hpp"

namespace sgdrf {

void fail_validation(const std::string& what) { throw ValidationError(what); }

}  // namespace sgdrf
