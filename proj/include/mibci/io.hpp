#pragma once

// File formats:
//   csv-v1  continuous recording, time-major text
//   tsv-v1  event markers
//   epk-v1  little-endian binary epoch set
// Parsers throw ParseError carrying the 1-based line (text) or byte offset
// (binary) of the first problem.

#include "mibci/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mibci {

inline constexpr const char* kRecordingFormat = "csv-v1";
inline constexpr const char* kMarkerFormat = "tsv-v1";
inline constexpr const char* kEpochFormat = "epk-v1";
inline constexpr const char* kPlanFormat = "plan-v1";

enum class RecordingFormat { CsvV1 };

// Extra `key=value` tokens written after the mandatory header fields.
using HeaderTags = std::map<std::string, std::string>;

ContinuousRecording read_recording(std::istream& in,
                                   const std::optional<Montage>& declared = std::nullopt);
ContinuousRecording load_recording(const std::filesystem::path& path,
                                   RecordingFormat format = RecordingFormat::CsvV1,
                                   const std::optional<Montage>& declared = std::nullopt);
void write_recording(std::ostream& out, const ContinuousRecording& rec, const HeaderTags& tags = {});
void save_recording(const std::filesystem::path& path, const ContinuousRecording& rec,
                    const HeaderTags& tags = {});

std::vector<EventMarker> read_markers(std::istream& in);
std::vector<EventMarker> load_markers(const std::filesystem::path& path);
void write_markers(std::ostream& out, const std::vector<EventMarker>& markers,
                   const std::string& comment = {});
void save_markers(const std::filesystem::path& path, const std::vector<EventMarker>& markers,
                  const std::string& comment = {});

EpochSet read_epochs(std::istream& in);
EpochSet load_epochs(const std::filesystem::path& path);
void write_epochs(std::ostream& out, const EpochSet& epochs);
void save_epochs(const std::filesystem::path& path, const EpochSet& epochs);

// channel,x,y table such as data/montage_30.csv.
Montage load_montage(const std::filesystem::path& path);

// Shortest text that reads back to the same float32 value (at most 9
// significant digits).
std::string format_f32(double value);
// Shortest round-trip text for a double.
std::string format_f64(double value);

}  // namespace mibci
