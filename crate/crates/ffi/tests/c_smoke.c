#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "stable_tree.h"

#define CHECK(x)                                                        \
  do {                                                                  \
    if (!(x)) {                                                         \
      char msg[256];                                                    \
      st_last_error(msg, sizeof msg);                                   \
      fprintf(stderr, "%s:%d: %s (%s)\n", __FILE__, __LINE__, #x, msg); \
      return 1;                                                         \
    }                                                                   \
  } while (0)

int main(void) {
  StTree *t = NULL;
  CHECK(st_tree_grow(1.5, 20, "I", 7, &t) == ST_OK);
  size_t leaves = 0;
  CHECK(st_tree_leaf_count(t, &leaves) == ST_OK && leaves == 20);

  size_t needed = 0;
  CHECK(st_tree_to_newick(t, NULL, 0, &needed) == ST_BUFFER_TOO_SMALL);
  char *nwk = (char *)malloc(needed);
  CHECK(st_tree_to_newick(t, nwk, needed, &needed) == ST_OK);

  StTree *u = NULL;
  CHECK(st_tree_from_newick(nwk, &u) == ST_OK);
  double a = 0, b = 0;
  CHECK(st_tree_distance(t, 3, 11, &a) == ST_OK);
  CHECK(st_tree_distance(u, 3, 11, &b) == ST_OK);
  CHECK(a > 0 && a - b < 1e-12 && b - a < 1e-12);
  CHECK(st_tree_distance(t, 0, 21, &a) == ST_OUT_OF_RANGE);
  CHECK(st_tree_grow(0.5, 20, "I", 7, &u) == ST_INVALID_PARAMETER);

  double m[5];
  CHECK(st_chain_sample(2.0, 5, 1, 0, m) == ST_OK);
  for (int i = 1; i < 5; i++) CHECK(m[i] > m[i - 1]);

  printf("ok %s\n", st_version());
  free(nwk);
  st_tree_free(t);
  st_tree_free(u);
  return 0;
}
