#ifndef PHYSNOTE_H
#define PHYSNOTE_H

/*
 * C interface to the physnote engine. Every function returns a pn_status;
 * on failure pn_last_error() holds a thread-local description that stays
 * valid until the next physnote call on the same thread. Strings returned
 * through char** out-parameters are heap copies owned by the caller and
 * must be released with pn_string_free().
 */

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pn_status {
    PN_OK = 0,
    PN_ERR_INVALID_ARGUMENT = 1, /* null pointer or out-of-range argument   */
    PN_ERR_CONFIG = 2,           /* bad session configuration               */
    PN_ERR_IO = 3,               /* file missing or unreadable/unwritable   */
    PN_ERR_SCHEMA = 4,           /* persisted document violates its schema  */
    PN_ERR_BACKEND = 5,          /* model/embedding transport trouble       */
    PN_ERR_DATA = 6,             /* inputs rejected by the pipeline         */
    PN_ERR_UNKNOWN = 7
} pn_status;

typedef struct pn_kb pn_kb;           /* knowledge base handle */
typedef struct pn_session pn_session; /* configured engine handle */

const char* pn_version(void);
const char* pn_last_error(void);

void pn_string_free(char* s);

/* Knowledge base lifecycle. */
pn_status pn_kb_create(pn_kb** out_kb);
pn_status pn_kb_load(const char* path, pn_kb** out_kb);
pn_status pn_kb_save(const pn_kb* kb, const char* path);
void pn_kb_free(pn_kb* kb);

/* Serialized views. */
pn_status pn_kb_to_json(const pn_kb* kb, char** out_json);
pn_status pn_kb_stats_json(const pn_kb* kb, char** out_json);
pn_status pn_kb_prune_check_json(const pn_kb* kb, double tau,
                                 unsigned long long n_min, char** out_json);

/*
 * Sessions wrap a JSON configuration document:
 *   frames, resolution, max_iters, theta, tau, n_min, expansion,
 *   keywords, kb_path, trace_dir, eval_stats,
 *   backend {kind: live|scripted|replay, ...}, record,
 *   embedding {kind: fallback|http, ...}
 */
pn_status pn_session_create(const char* config_json, pn_session** out_session);
void pn_session_free(pn_session* session);

/* Runs over a JSONL items file; the report lands as a JSON document. */
pn_status pn_run_train(pn_session* session, pn_kb* kb, const char* items_path,
                       char** out_report_json);
pn_status pn_run_eval(pn_session* session, const pn_kb* kb, const char* items_path,
                      int parallelism, char** out_report_json);

#ifdef __cplusplus
}
#endif

#endif /* PHYSNOTE_H */
