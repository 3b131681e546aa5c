#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bldg {

enum class Errc {
  // geodata_io
  MissingHeaderKey,
  CountMismatch,
  NonNumericToken,
  IndexOutOfRange,
  UnsupportedGeometryType,
  UnclosedRing,
  MalformedDocument,
  LengthMismatch,
  // geometry
  DegenerateRing,
  NoCellsCovered,
  // features
  MissingLabel,
  DuplicateUid,
  InsufficientRows,
  NonNumericFeature,
  UnknownKeepFeature,
  UnknownFeature,
  EmptyFitSet,
  ClassTooSmall,
  MalformedCsv,
  // neuralnet
  InvalidLayerLadder,
  ShapeMismatch,
  NonFiniteGradient,
  SchemaMismatch,
  CorruptModel,
  // trainer
  EmptySet,
  EmptySplit,
  DivergedLoss,
  InvalidConfig,
  // synth
  InfeasibleConfig,
  SceneOverflow,
};

inline std::string_view errc_name(Errc c) {
  switch (c) {
    case Errc::MissingHeaderKey: return "MissingHeaderKey";
    case Errc::CountMismatch: return "CountMismatch";
    case Errc::NonNumericToken: return "NonNumericToken";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::UnsupportedGeometryType: return "UnsupportedGeometryType";
    case Errc::UnclosedRing: return "UnclosedRing";
    case Errc::MalformedDocument: return "MalformedDocument";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateRing: return "DegenerateRing";
    case Errc::NoCellsCovered: return "NoCellsCovered";
    case Errc::MissingLabel: return "MissingLabel";
    case Errc::DuplicateUid: return "DuplicateUid";
    case Errc::InsufficientRows: return "InsufficientRows";
    case Errc::NonNumericFeature: return "NonNumericFeature";
    case Errc::UnknownKeepFeature: return "UnknownKeepFeature";
    case Errc::UnknownFeature: return "UnknownFeature";
    case Errc::EmptyFitSet: return "EmptyFitSet";
    case Errc::ClassTooSmall: return "ClassTooSmall";
    case Errc::MalformedCsv: return "MalformedCsv";
    case Errc::InvalidLayerLadder: return "InvalidLayerLadder";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::SchemaMismatch: return "SchemaMismatch";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::EmptySet: return "EmptySet";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::InfeasibleConfig: return "InfeasibleConfig";
    case Errc::SceneOverflow: return "SceneOverflow";
  }
  return "Unknown";
}

// Every failure surfaced by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace bldg
