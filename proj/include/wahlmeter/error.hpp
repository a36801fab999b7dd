#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wahlmeter {

enum class Errc {
  parse_error,
  missing_translation,
  duplicate_id,
  inconsistent_bundestag_flags,
  unknown_spectrum_value,
  missing_cell,
  value_out_of_range,
  length_mismatch,
  incomplete_responses,
  empty_input,
  missing_bundestag_party,
  all_zero_alignments,
  zero_total_seats,
  endpoint_error,
  replay_miss,
  missing_model_metadata,
  incomplete_theta_table,
  missing_language,
  empty_matrix,
  incomplete_input,
  io_error,
};

inline const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::parse_error: return "ParseError";
    case Errc::missing_translation: return "MissingTranslation";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::inconsistent_bundestag_flags: return "InconsistentBundestagFlags";
    case Errc::unknown_spectrum_value: return "UnknownSpectrumValue";
    case Errc::missing_cell: return "MissingCell";
    case Errc::value_out_of_range: return "ValueOutOfRange";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::incomplete_responses: return "IncompleteResponses";
    case Errc::empty_input: return "EmptyInput";
    case Errc::missing_bundestag_party: return "MissingBundestagParty";
    case Errc::all_zero_alignments: return "AllZeroAlignments";
    case Errc::zero_total_seats: return "ZeroTotalSeats";
    case Errc::endpoint_error: return "EndpointError";
    case Errc::replay_miss: return "ReplayMiss";
    case Errc::missing_model_metadata: return "MissingModelMetadata";
    case Errc::incomplete_theta_table: return "IncompleteThetaTable";
    case Errc::missing_language: return "MissingLanguage";
    case Errc::empty_matrix: return "EmptyMatrix";
    case Errc::incomplete_input: return "IncompleteInput";
    case Errc::io_error: return "IoError";
  }
  return "UnknownError";
}

/// Exception carrying a machine-checkable error code next to the diagnostic text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace wahlmeter
