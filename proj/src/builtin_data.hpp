#pragma once

#include <span>
#include <string_view>

namespace gengrid::scenarios::detail {

struct BuiltinDocument {
    std::string_view name;
    std::string_view text;
};

// Generated at configure time from scenarios/.
std::span<const BuiltinDocument> builtin_documents();
std::string_view noise_defaults_document();

}  // namespace gengrid::scenarios::detail
