#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace nqk {

/// SHA-1 digest of a byte string, lowercase hex.
std::string sha1_hex(std::string_view data);

/// Git-style blob hash: sha1("blob <len>\0" + data). Used to fingerprint
/// experiment inputs in results files.
std::string git_blob_hash(std::string_view data);

}  // namespace nqk
