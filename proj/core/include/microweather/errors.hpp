#pragma once

#include <stdexcept>
#include <string>

namespace mw {

/// Broad failure class; the CLI maps each to an exit code.
enum class ErrorClass { Usage, Data, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), class_(cls) {}
  [[nodiscard]] ErrorClass error_class() const noexcept { return class_; }

 private:
  ErrorClass class_;
};

#define MW_DEFINE_ERROR(Name, Class)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(Class, what) {}     \
  };

// Domain / ingestion.
MW_DEFINE_ERROR(InvalidObservation, ErrorClass::Data)
MW_DEFINE_ERROR(PartitionError, ErrorClass::Data)
MW_DEFINE_ERROR(SchemaError, ErrorClass::Data)
MW_DEFINE_ERROR(CoverageError, ErrorClass::Data)
MW_DEFINE_ERROR(TimeAxisError, ErrorClass::Data)
MW_DEFINE_ERROR(FillError, ErrorClass::Data)
MW_DEFINE_ERROR(OutOfHull, ErrorClass::Data)
MW_DEFINE_ERROR(UnknownTimestamp, ErrorClass::Data)
MW_DEFINE_ERROR(IoError, ErrorClass::Data)
MW_DEFINE_ERROR(VersionError, ErrorClass::Data)
MW_DEFINE_ERROR(ConfigMismatch, ErrorClass::Data)
MW_DEFINE_ERROR(CorruptChecksum, ErrorClass::Data)
MW_DEFINE_ERROR(MissingCheckpoint, ErrorClass::Data)
MW_DEFINE_ERROR(SurfaceModeMismatch, ErrorClass::Data)

// Encoders / network.
MW_DEFINE_ERROR(EncodingError, ErrorClass::Data)
MW_DEFINE_ERROR(DimensionMismatch, ErrorClass::Data)
MW_DEFINE_ERROR(ShapeError, ErrorClass::Data)
MW_DEFINE_ERROR(RoleMismatch, ErrorClass::Data)
MW_DEFINE_ERROR(MaskRowEmpty, ErrorClass::Data)
MW_DEFINE_ERROR(InvalidConfig, ErrorClass::Usage)

// Training / numerics.
MW_DEFINE_ERROR(EmptyBatch, ErrorClass::Numerical)
MW_DEFINE_ERROR(NumericalError, ErrorClass::Numerical)

// Baselines / metrics.
MW_DEFINE_ERROR(InsufficientStations, ErrorClass::Data)
MW_DEFINE_ERROR(SingularSystem, ErrorClass::Numerical)
MW_DEFINE_ERROR(EmptySample, ErrorClass::Data)
MW_DEFINE_ERROR(KTooLarge, ErrorClass::Data)
MW_DEFINE_ERROR(DegenerateVariance, ErrorClass::Numerical)

#undef MW_DEFINE_ERROR

/// Process exit code for an error class: usage 1, data 2, numerical 3.
int exit_code_for(ErrorClass cls) noexcept;

}  // namespace mw
