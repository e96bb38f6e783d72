#ifndef MRC_MODEL_IO_HPP
#define MRC_MODEL_IO_HPP

#include <filesystem>
#include <string>

#include "mrc/classifier.hpp"

namespace mrc {

inline constexpr int kModelFormatVersion = 1;

/// JSON text of a model. Frequencies are not stored; they are regenerated
/// from the feature seed when loading.
std::string serialize_model(const MrcModel& model);
MrcModel deserialize_model(const std::string& text);

void save_model(const MrcModel& model, const std::filesystem::path& path);
/// Throws InputError for unreadable files, bad JSON or an unknown version.
MrcModel load_model(const std::filesystem::path& path);

}  // namespace mrc

#endif  // MRC_MODEL_IO_HPP
