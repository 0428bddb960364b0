package stats;

import java.util.HashMap;
import java.util.List;
import java.util.Map;

/**
 * Word statistics over a token stream.
 */
public class WordCounter {

    private final Map<String, Integer> counts = new HashMap<>();
    private int total;

    public int lookup0(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 0;
    }

    public int lookup1(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 1;
    }

    public int lookup2(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 2;
    }

    public int lookup3(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 3;
    }

    public int lookup4(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 4;
    }

    public int lookup5(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 5;
    }

    public int lookup6(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 6;
    }

    public int lookup7(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 7;
    }

    public int lookup8(String word) {
        Integer c = counts.get(word);
        return c == null ? 0 : c + 8;
    }

    /* Counts one word and returns its frequency. */
    public int add(String word) {
        int frequency = 0;
        if (counts.containsKey(word)) {
            frequency = counts.get(word);
        }
        total = total + 1;
        // bump the counter
        counts.put(word, frequency + 1);
        if (total > 1000) {
            
        frequency = frequency + 1;
        }
        return frequency;
    }
}
