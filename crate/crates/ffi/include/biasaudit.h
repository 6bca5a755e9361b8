/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef BIASAUDIT_H
#define BIASAUDIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum BiasauditStatus {
  BiasauditStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  BiasauditStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  BiasauditStatus_InvalidUtf8 = 2,
  /**
   * Invalid configuration or argument value.
   */
  BiasauditStatus_Config = 3,
  /**
   * The data could not be processed (malformed, too small, single class).
   */
  BiasauditStatus_Data = 4,
  /**
   * A file could not be read or written.
   */
  BiasauditStatus_Io = 5,
  /**
   * An index was outside the valid range.
   */
  BiasauditStatus_OutOfRange = 6,
  /**
   * The library panicked; the handle arguments should be considered unusable.
   */
  BiasauditStatus_Panic = 7,
} BiasauditStatus;

/**
 * Feature set used for the vocabulary.
 */
typedef enum BiasauditMode {
  BiasauditMode_Adjectives = 0,
  BiasauditMode_AdjectivesAndNouns = 1,
} BiasauditMode;

/**
 * A loaded corpus of biographies.
 */
typedef struct BiasauditCorpus BiasauditCorpus;

/**
 * A fitted model together with the vocabulary its weights are aligned to.
 */
typedef struct BiasauditModel BiasauditModel;

/**
 * Stoplist, neutralization map, word lists and lexicons.
 */
typedef struct BiasauditResources BiasauditResources;

typedef struct BiasauditVocabulary BiasauditVocabulary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *biasaudit_version(void);

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *biasaudit_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and must not be used afterwards.
 */
void biasaudit_string_free(char *s);

/**
 * Loads a `.jsonl` or `.tsv` corpus file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BiasauditStatus biasaudit_corpus_load(const char *path, struct BiasauditCorpus **out);

/**
 * Generates a synthetic corpus. With `planted` set, one word is present in
 * 30% of female and 10% of male overviews; otherwise there is no signal.
 *
 * # Safety
 * `out` must be writable.
 */
enum BiasauditStatus biasaudit_corpus_synthetic(bool planted,
                                                size_t docs_per_gender,
                                                uint64_t seed,
                                                struct BiasauditCorpus **out);

/**
 * Number of records, or 0 for a null handle.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t biasaudit_corpus_len(const struct BiasauditCorpus *corpus);

/**
 * # Safety
 * `corpus` must be null or a live handle, not used afterwards.
 */
void biasaudit_corpus_free(struct BiasauditCorpus *corpus);

/**
 * The bundled resources. Never null.
 */
struct BiasauditResources *biasaudit_resources_bundled(void);

/**
 * # Safety
 * `resources` must be null or a live handle, not used afterwards.
 */
void biasaudit_resources_free(struct BiasauditResources *resources);

/**
 * Builds the vocabulary from the `k` most frequent words per gender.
 * `resources` may be null to use the bundled ones.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum BiasauditStatus biasaudit_vocabulary_build(const struct BiasauditCorpus *corpus,
                                                const struct BiasauditResources *resources,
                                                enum BiasauditMode mode,
                                                size_t k,
                                                struct BiasauditVocabulary **out);

/**
 * Number of words, or 0 for a null handle.
 *
 * # Safety
 * `vocabulary` must be null or a live handle.
 */
size_t biasaudit_vocabulary_len(const struct BiasauditVocabulary *vocabulary);

/**
 * Copies word `index` into a new string owned by the caller.
 *
 * # Safety
 * `vocabulary` must be live; `out` must be writable.
 */
enum BiasauditStatus biasaudit_vocabulary_word(const struct BiasauditVocabulary *vocabulary,
                                               size_t index,
                                               char **out);

/**
 * # Safety
 * `vocabulary` must be null or a live handle, not used afterwards.
 */
void biasaudit_vocabulary_free(struct BiasauditVocabulary *vocabulary);

/**
 * Fits a model with default hyperparameters on a gender-balanced draw of
 * `corpus` chosen by `seed`. The model keeps its own copy of the vocabulary.
 *
 * # Safety
 * Handles must be live (`resources` may be null); `out` must be writable.
 */
enum BiasauditStatus biasaudit_model_train(const struct BiasauditCorpus *corpus,
                                           const struct BiasauditVocabulary *vocabulary,
                                           const struct BiasauditResources *resources,
                                           uint64_t seed,
                                           struct BiasauditModel **out);

/**
 * Probability that `text` describes a woman.
 *
 * # Safety
 * `model` must be live (`resources` may be null); `text` NUL-terminated;
 * `out` writable.
 */
enum BiasauditStatus biasaudit_model_predict_proba(const struct BiasauditModel *model,
                                                   const struct BiasauditResources *resources,
                                                   const char *text,
                                                   double *out);

/**
 * Weight of word `index`; positive weights favour the female class.
 *
 * # Safety
 * `model` must be live; `out` writable.
 */
enum BiasauditStatus biasaudit_model_weight(const struct BiasauditModel *model,
                                            size_t index,
                                            double *out);

/**
 * Serializes the model to its text form (caller frees the string).
 *
 * # Safety
 * `model` must be live; `out` writable.
 */
enum BiasauditStatus biasaudit_model_to_text(const struct BiasauditModel *model, char **out);

/**
 * Restores a model from its text form. The vocabulary must be the one the
 * model was trained with; this is verified by fingerprint.
 *
 * # Safety
 * `text` NUL-terminated; `vocabulary` live; `out` writable.
 */
enum BiasauditStatus biasaudit_model_from_text(const char *text,
                                               const struct BiasauditVocabulary *vocabulary,
                                               struct BiasauditModel **out);

/**
 * # Safety
 * `model` must be null or a live handle, not used afterwards.
 */
void biasaudit_model_free(struct BiasauditModel *model);

/**
 * Runs the full audit and returns the report as JSON (caller frees).
 *
 * `config_json` may be null for defaults, or a JSON object with any of the
 * experiment settings (`mode`, `runs`, `split_ratio`, `k`, `seed`, `params`,
 * `alpha`, `strict_vocabulary`, `min_per_gender`).
 *
 * # Safety
 * `corpus` must be live (`resources` may be null); `config_json` null or
 * NUL-terminated; `out` writable.
 */
enum BiasauditStatus biasaudit_audit_json(const struct BiasauditCorpus *corpus,
                                          const struct BiasauditResources *resources,
                                          const char *config_json,
                                          char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BIASAUDIT_H */
