/* C API for the nsvm toolkit: nonparallel-hyperplane SVM training and
 * prediction behind opaque handles and status codes.
 *
 * Matches the exported surface of the nsvm-ffi crate; regenerate with
 * cbindgen (see cbindgen.toml) or keep edits in sync by hand. The
 * `header_matches_exported_surface` test in the crate checks that every
 * exported function is declared here. */

#ifndef NSVM_H
#define NSVM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status code returned by every fallible entry point. */
typedef enum NsvmStatus {
  NSVM_STATUS_OK = 0,
  NSVM_STATUS_NULL_POINTER = 1,
  NSVM_STATUS_INVALID_ARGUMENT = 2,
  NSVM_STATUS_PARSE_ERROR = 3,
  NSVM_STATUS_NUMERICAL_FAILURE = 4,
  NSVM_STATUS_IO_ERROR = 5,
  NSVM_STATUS_UTF8_ERROR = 6,
  NSVM_STATUS_PANIC = 7,
} NsvmStatus;

/* Opaque dataset handle. */
typedef struct NsvmDataset NsvmDataset;

/* Opaque trained-model handle. */
typedef struct NsvmModel NsvmModel;

/* Training options for the two NSVM solvers. Start from
 * nsvm_train_options_default() and override fields as needed. */
typedef struct NsvmTrainOptions {
  double c1;
  double c2;
  double l;
  double tol;
  uint32_t max_iter;
  uint32_t restart_period;
  uint64_t seed;
  /* 0 = stationary-exact update, 1 = doubled closed-form variant. */
  uint32_t update_rule;
  /* 0 = class-planes warm start, 1 = seeded random. */
  uint32_t init;
  /* Nonzero aborts training if the descent quantity ever increases. */
  uint32_t enforce_descent;
} NsvmTrainOptions;

/* Kernel kinds for nsvm_train_kernel. */
#define NSVM_KERNEL_LINEAR 0u
#define NSVM_KERNEL_RBF 1u

/* Copy the last error message for this thread into buf (NUL-terminated
 * when cap > 0). Returns the full message length in bytes. */
size_t nsvm_last_error_message(char *buf, size_t cap);

/* Library version as a static NUL-terminated string. */
const char *nsvm_version(void);

NsvmTrainOptions nsvm_train_options_default(void);

/* Datasets. x is dense row-major (rows x cols); labels are one numeric
 * value per row, encoded internally by sorted distinct value. */
NsvmStatus nsvm_dataset_create(const double *x, size_t rows, size_t cols,
                               const uint32_t *labels, NsvmDataset **out);
NsvmStatus nsvm_dataset_load_csv(const char *path, bool has_header,
                                 NsvmDataset **out);
NsvmStatus nsvm_dataset_load_libsvm(const char *path, NsvmDataset **out);
void nsvm_dataset_free(NsvmDataset *ds);
size_t nsvm_dataset_rows(const NsvmDataset *ds);
size_t nsvm_dataset_cols(const NsvmDataset *ds);
size_t nsvm_dataset_classes(const NsvmDataset *ds);

/* Trainers. */
NsvmStatus nsvm_train_linear(const NsvmDataset *ds,
                             const NsvmTrainOptions *opts, NsvmModel **out);
NsvmStatus nsvm_train_kernel(const NsvmDataset *ds,
                             const NsvmTrainOptions *opts, uint32_t kernel_kind,
                             double sigma, NsvmModel **out);
NsvmStatus nsvm_train_gepsvm(const NsvmDataset *ds, double delta,
                             NsvmModel **out);
NsvmStatus nsvm_train_lstsvm(const NsvmDataset *ds, double lambda, double delta,
                             NsvmModel **out);
NsvmStatus nsvm_train_pcc(const NsvmDataset *ds, double nu, NsvmModel **out);

/* Models. Predicted labels are encoded 1..=classes; label names map them
 * back to the original tokens. */
void nsvm_model_free(NsvmModel *model);
size_t nsvm_model_classes(const NsvmModel *model);
size_t nsvm_model_features(const NsvmModel *model);
NsvmStatus nsvm_model_predict(const NsvmModel *model, const double *x,
                              size_t rows, size_t cols, uint32_t *out_labels);
size_t nsvm_model_label_name(const NsvmModel *model, uint32_t label, char *buf,
                             size_t cap);
NsvmStatus nsvm_model_save(const NsvmModel *model, const char *path);
NsvmStatus nsvm_model_load(const char *path, NsvmModel **out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* NSVM_H */
