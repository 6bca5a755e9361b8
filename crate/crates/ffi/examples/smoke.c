/* Minimal C client: synthesize a corpus, build a vocabulary, train, predict
 * and audit. Exits non-zero on the first failure. */
#include <stdio.h>
#include <string.h>

#include "biasaudit.h"

#define CHECK(call)                                                          \
    do {                                                                     \
        BiasauditStatus status_ = (call);                                    \
        if (status_ != BiasauditStatus_Ok) {                                 \
            fprintf(stderr, "%s failed (%d): %s\n", #call, (int)status_,     \
                    biasaudit_last_error());                                 \
            return 1;                                                        \
        }                                                                    \
    } while (0)

int main(void) {
    BiasauditCorpus *corpus = NULL;
    BiasauditVocabulary *vocab = NULL;
    BiasauditModel *model = NULL;
    char *word = NULL;
    char *report = NULL;
    double p_female = 0.0, p_male = 0.0;

    printf("biasaudit %s\n", biasaudit_version());
    CHECK(biasaudit_corpus_synthetic(true, 300, 7, &corpus));
    CHECK(biasaudit_vocabulary_build(corpus, NULL, BiasauditMode_Adjectives, 50, &vocab));
    CHECK(biasaudit_vocabulary_word(vocab, 0, &word));
    printf("records=%zu vocabulary=%zu first=%s\n", biasaudit_corpus_len(corpus),
           biasaudit_vocabulary_len(vocab), word);
    biasaudit_string_free(word);

    CHECK(biasaudit_model_train(corpus, vocab, NULL, 7, &model));
    CHECK(biasaudit_model_predict_proba(model, NULL, "She was beautiful.", &p_female));
    CHECK(biasaudit_model_predict_proba(model, NULL, "He was significant.", &p_male));
    printf("p(female | beautiful)=%.3f p(female | significant)=%.3f\n", p_female, p_male);
    if (!(p_female > p_male)) {
        fprintf(stderr, "unexpected ordering of predictions\n");
        return 1;
    }

    if (biasaudit_vocabulary_word(vocab, 100000, &word) != BiasauditStatus_OutOfRange) {
        fprintf(stderr, "out-of-range index not reported\n");
        return 1;
    }

    CHECK(biasaudit_audit_json(corpus, NULL, "{\"runs\": 3, \"seed\": 7}", &report));
    if (strstr(report, "\"schema_version\": 1") == NULL) {
        fprintf(stderr, "report lacks schema_version\n");
        return 1;
    }
    printf("report bytes=%zu\n", strlen(report));
    biasaudit_string_free(report);

    biasaudit_model_free(model);
    biasaudit_vocabulary_free(vocab);
    biasaudit_corpus_free(corpus);
    puts("ok");
    return 0;
}
