#include <stdio.h>
#include <string.h>

/* Number of characters before the line's terminator: stops at the first
   newline, or at the NUL when the text has none. */
int line_width(const char *s) {
    int n = 0;
    while (s[n] != '\0' && s[n] != '\n')
        n++;
    return n;
}

/* A line is blank when everything before its end is a space or a tab. */
int is_blank(const char *s) {
    int w = line_width(s);
    int i;
    for (i = 0; i < w; i++) {
        if (s[i] != ' ' && s[i] != '\t')
            return 0;
    }
    return 1;
}

/* Print one line, numbering it when asked; returns the next line number.
   The number field is six columns wide, right aligned, tab separated. */
int emit_line(const char *s, int number, int lineno) {
    int w = line_width(s);
    int i;
    if (number) {
        char digits[16];
        int len = 0, pad, v = lineno;
        do {
            digits[len++] = (char)('0' + v % 10);
            v /= 10;
        } while (v > 0);
        for (pad = len; pad < 6; pad++)
            putchar(' ');
        while (len > 0)
            putchar(digits[--len]);
        putchar('\t');
    }
    for (i = 0; i < w; i++)
        putchar(s[i]);
    putchar('\n');
    return lineno + 1;
}

int main(int argc, char **argv) {
    char buf[4096];
    int number = 0, squeeze = 0;
    int lineno = 1, pending_blank = 0;
    int i;
    for (i = 1; i < argc; i++) {
        if (strcmp(argv[i], "-n") == 0)
            number = 1;
        else if (strcmp(argv[i], "-s") == 0)
            squeeze = 1;
    }
    while (fgets(buf, sizeof buf, stdin) != NULL) {
        if (squeeze && is_blank(buf)) {
            if (pending_blank)
                continue;
            pending_blank = 1;
        } else {
            pending_blank = 0;
        }
        lineno = emit_line(buf, number, lineno);
    }
    return 0;
}
